"""Sphere and Euclidean geometry: geodesic distance, exponential and
logarithm maps with explicit handling of the spherical cut locus.

Points of the d-sphere are unit vectors in ambient R^{d+1} and the
metric is arc length, dist(x, z) = arccos(x . z) in [0, pi].  The
logarithm map is extended to the antipode -x: every unit tangent
direction at x reaches -x after distance pi, so a deterministic
direction is fixed there (``antipodal_direction``).  With that choice
exp_x(log_x(xi)) = xi on the whole sphere and ||log_x(xi)|| equals the
geodesic distance everywhere, including the cut locus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this value of 1 + x.xi the regular log formula has no precision
# left; the query is treated as antipodal.
ANTIPODE_TOL = 1e-9

# Construction accepts norms within this window of 1 and normalizes;
# anything farther off is rejected as genuinely bad data.
NORM_WINDOW = 1e-6

# Tangency tolerance |<base, vec>| for tangent vectors.
TANGENCY_TOL = 1e-10


def _as_vector(values, name: str = "vector") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SpherePoint:
    """A point of S^d stored as a unit vector in R^{d+1}.

    Construction normalizes inputs whose norm lies within ``NORM_WINDOW``
    of 1 and rejects anything farther off.
    """

    coords: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_vector(self.coords, "coords")
        if arr.size < 2:
            raise ValueError("sphere dimension must be at least 1 (ambient length >= 2)")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_WINDOW:
            raise ValueError(f"coords norm {norm} is not within {NORM_WINDOW} of 1")
        object.__setattr__(self, "coords", _freeze(arr / norm))

    @property
    def dim(self) -> int:
        """Intrinsic dimension d; the ambient space is R^{d+1}."""
        return self.coords.size - 1

    def antipode(self) -> "SpherePoint":
        return SpherePoint(-self.coords)


@dataclass(frozen=True)
class TangentVector:
    """An element of the tangent space at ``base``: an ambient vector
    orthogonal to the base point.  Its Euclidean norm is a geodesic
    length in radians."""

    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_vector(self.vec, "vec")
        if arr.size != self.base.coords.size:
            raise ValueError("vec must match the ambient dimension of base")
        if abs(float(self.base.coords @ arr)) > TANGENCY_TOL:
            raise ValueError("vec is not tangent to the sphere at base")
        object.__setattr__(self, "vec", _freeze(arr))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


def _check_same_dim(x: SpherePoint, z: SpherePoint) -> None:
    if x.coords.size != z.coords.size:
        raise ValueError(
            f"dimension mismatch: {x.coords.size - 1} vs {z.coords.size - 1}"
        )


def sphere_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Arc length arccos(a . b) between unit vectors, evaluated as
    2 atan2(||a - b||, ||a + b||).

    The two expressions agree exactly in real arithmetic, but arccos
    loses all absolute accuracy near its endpoints: identical inputs can
    round to an angle of ~1.5e-8.  The atan2 form is accurate over the
    whole range, which the coincidence tolerance of the smoothing
    estimator (1e-12 in angle) depends on.
    """
    chord = float(np.linalg.norm(a - b))
    cochord = float(np.linalg.norm(a + b))
    return 2.0 * math.atan2(chord, cochord)


def sphere_angles(query: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Vectorized ``sphere_angle`` from one query to each row of points."""
    chord = np.linalg.norm(points - query, axis=1)
    cochord = np.linalg.norm(points + query, axis=1)
    return 2.0 * np.arctan2(chord, cochord)


def geodesic_distance(x: SpherePoint, z: SpherePoint) -> float:
    """Arc-length distance arccos(x . z) in [0, pi], 0 iff x = z."""
    _check_same_dim(x, z)
    return sphere_angle(x.coords, z.coords)


def exp_map(x: SpherePoint, v: TangentVector) -> SpherePoint:
    """Follow the geodesic leaving x with velocity v for unit time.

    exp_x(v) = cos(||v||) x + sin(||v||) v / ||v||, and exp_x(0) = x.
    """
    if not np.array_equal(v.base.coords, x.coords):
        raise ValueError("tangent vector is based at a different point")
    theta = v.norm
    if theta == 0.0:
        return x
    direction = v.vec / theta
    return SpherePoint(math.cos(theta) * x.coords + math.sin(theta) * direction)


def antipodal_direction(x: SpherePoint) -> TangentVector:
    """Deterministic unit tangent direction used by ``log_map`` at the
    antipode.

    Take the standard basis vector e_i with i = argmin_j |x_j| (ties go
    to the smallest index), project it onto the tangent space at x and
    normalize.  The chosen e_i is never parallel to x, so the projection
    never degenerates, and the rule is reproducible.
    """
    i = int(np.argmin(np.abs(x.coords)))
    basis = np.zeros_like(x.coords)
    basis[i] = 1.0
    tangent = basis - x.coords[i] * x.coords
    tangent /= np.linalg.norm(tangent)
    return TangentVector(x, tangent)


def log_map(x: SpherePoint, xi: SpherePoint) -> TangentVector:
    """Right inverse of ``exp_map``: exp_map(x, log_map(x, xi)) = xi for
    every xi, and ||log_map(x, xi)|| = geodesic_distance(x, xi).

    For xi within ``ANTIPODE_TOL`` of -x, returns pi times
    ``antipodal_direction(x)``; that direction is one valid choice among
    the circle of radius pi that exp_x collapses onto the antipode.
    """
    _check_same_dim(x, xi)
    dot = float(np.clip(x.coords @ xi.coords, -1.0, 1.0))
    if 1.0 + dot <= ANTIPODE_TOL:
        u0 = antipodal_direction(x)
        return TangentVector(x, math.pi * u0.vec)
    tangent = xi.coords - dot * x.coords
    tangent_norm = float(np.linalg.norm(tangent))
    theta = sphere_angle(x.coords, xi.coords)
    if tangent_norm == 0.0 or theta == 0.0:
        return TangentVector(x, np.zeros_like(x.coords))
    return TangentVector(x, (theta / tangent_norm) * tangent)


def euclidean_distance(x, z) -> float:
    """l2 norm of the difference of two equal-length real vectors."""
    xa = _as_vector(x, "x")
    za = _as_vector(z, "z")
    if xa.size != za.size:
        raise ValueError(f"dimension mismatch: {xa.size} vs {za.size}")
    return float(np.linalg.norm(xa - za))


@dataclass(frozen=True)
class Sphere:
    """The unit d-sphere with the arc-length metric, as a manifold for
    distance-based kernels."""

    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("sphere dimension must be at least 1")

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def validate_points(self, points) -> np.ndarray:
        """Check an (n, d+1) array of rows against the unit-norm window
        and return the normalized copy."""
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.ambient_dim:
            raise ValueError(
                f"expected shape (n, {self.ambient_dim}), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("points must be finite")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_WINDOW):
            raise ValueError("points must lie on the unit sphere")
        return arr / norms[:, None]

    def distance(self, a, b) -> float:
        return sphere_angle(np.asarray(a, dtype=float), np.asarray(b, dtype=float))

    def distances(self, query, points) -> np.ndarray:
        """Geodesic distances from one query to each row of ``points``."""
        return sphere_angles(np.asarray(query, dtype=float), np.asarray(points, dtype=float))


@dataclass(frozen=True)
class Euclidean:
    """Flat R^d with the ordinary Euclidean metric."""

    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    def validate_points(self, points) -> np.ndarray:
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise ValueError(f"expected shape (n, {self.dim}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("points must be finite")
        return arr

    def distance(self, a, b) -> float:
        return euclidean_distance(a, b)

    def distances(self, query, points) -> np.ndarray:
        diff = np.asarray(points, dtype=float) - np.asarray(query, dtype=float)
        return np.linalg.norm(diff, axis=1)
