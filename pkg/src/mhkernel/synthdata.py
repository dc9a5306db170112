"""Seeded synthetic data on the sphere: point distributions with known
densities, conditional label models with known regression function, and
Monte Carlo Bayes risk.

Distributions are restricted to families with a density with respect to
the sphere's volume measure (uniform, von Mises-Fisher mixtures), and
labels are +-1, so the assumptions behind the consistency experiments
hold by construction and the Bayes risk is independently computable.

Sampling algorithms (fixed, so seeded runs are portable):

* uniform: normalized standard Gaussian vectors;
* von Mises-Fisher on S^2: the cosine t of the polar angle from the mean
  has density proportional to exp(kappa * t) on [-1, 1], sampled by the
  exact inverse CDF t = 1 + log(u + (1 - u) * exp(-2 kappa)) / kappa;
  the direction orthogonal to the mean is a normalized projected
  Gaussian;
* von Mises-Fisher on S^d, d != 2: Wood's rejection sampler for t, with
  envelope parameter b = d / (sqrt(4 kappa^2 + d^2) + 2 kappa),
  x0 = (1 - b) / (1 + b), acceptance test
  kappa t + d log(1 - x0 t) - c >= log u against Beta(d/2, d/2)
  proposals, c = kappa x0 + d log(1 - x0^2);
* kappa = 0 reduces to the uniform marginal (1 + t)/2 ~ Beta(d/2, d/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .data import LabeledDataset
from .geometry import NORM_WINDOW, _freeze


def sphere_area(dim: int) -> float:
    """Surface measure of the unit d-sphere: 2 pi^((d+1)/2) / Gamma((d+1)/2)."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / math.gamma((dim + 1) / 2.0)


def _unit_rows(gen: np.random.Generator, n: int, ambient: int) -> np.ndarray:
    raw = gen.standard_normal((n, ambient))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _vmf_cosines(kappa: float, dim: int, n: int, gen: np.random.Generator) -> np.ndarray:
    if kappa == 0.0:
        return 2.0 * gen.beta(dim / 2.0, dim / 2.0, size=n) - 1.0
    if dim == 2:
        u = gen.random(n)
        return 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * kappa)) / kappa
    b = dim / (math.sqrt(4.0 * kappa**2 + dim**2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dim * math.log(1.0 - x0**2)
    out = np.empty(n)
    filled = 0
    while filled < n:
        todo = n - filled
        z = gen.beta(dim / 2.0, dim / 2.0, size=todo)
        t = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = gen.random(todo)
        accept = kappa * t + dim * np.log(1.0 - x0 * t) - c >= np.log(u)
        taken = t[accept]
        out[filled : filled + taken.size] = taken
        filled += taken.size
    return out


def _vmf_sample(mean: np.ndarray, kappa: float, n: int, gen: np.random.Generator) -> np.ndarray:
    dim = mean.size - 1
    t = _vmf_cosines(kappa, dim, n, gen)
    tangent = gen.standard_normal((n, mean.size))
    tangent -= np.outer(tangent @ mean, mean)
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    return t[:, None] * mean + np.sqrt(np.clip(1.0 - t**2, 0.0, None))[:, None] * tangent


def _log_vmf_normalizer(kappa: float, dim: int) -> float:
    """log of the density constant c(kappa) with c(0) = 1 / area(S^d)."""
    if kappa == 0.0:
        return -math.log(sphere_area(dim))
    p = dim + 1
    nu = p / 2.0 - 1.0
    # I_nu(kappa) = ive(nu, kappa) * e^kappa, exponentially scaled for stability
    log_bessel = math.log(special.ive(nu, kappa)) + kappa
    return nu * math.log(kappa) - (p / 2.0) * math.log(2.0 * math.pi) - log_bessel


@dataclass(frozen=True)
class SphereDistribution:
    """A point distribution on the d-sphere with a known density:
    ``uniform`` or a von Mises-Fisher mixture."""

    kind: str
    dim: int
    means: np.ndarray | None = None
    kappas: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if self.kind == "uniform":
            return
        if self.kind != "vmf_mixture":
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        means = np.asarray(self.means, dtype=float)
        kappas = np.asarray(self.kappas, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if means.ndim != 2 or means.shape[1] != self.dim + 1:
            raise ValueError("means must have shape (k, dim + 1)")
        norms = np.linalg.norm(means, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_WINDOW):
            raise ValueError("mixture means must be unit vectors")
        if kappas.shape != (means.shape[0],) or np.any(kappas < 0.0):
            raise ValueError("concentrations must be nonnegative, one per component")
        if weights.shape != (means.shape[0],) or np.any(weights < 0.0):
            raise ValueError("mixture weights must be nonnegative, one per component")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")
        object.__setattr__(self, "means", _freeze(means / norms[:, None]))
        object.__setattr__(self, "kappas", _freeze(kappas))
        object.__setattr__(self, "weights", _freeze(weights))

    @classmethod
    def uniform(cls, dim: int) -> "SphereDistribution":
        return cls("uniform", dim)

    @classmethod
    def vmf(cls, mean, kappa: float) -> "SphereDistribution":
        mean = np.asarray(mean, dtype=float)
        return cls("vmf_mixture", mean.size - 1, mean[None, :], np.array([kappa]), np.array([1.0]))

    @classmethod
    def vmf_mixture(cls, means, kappas, weights) -> "SphereDistribution":
        means = np.asarray(means, dtype=float)
        return cls("vmf_mixture", means.shape[1] - 1, means, kappas, weights)

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """n independent draws as rows of an (n, d+1) array."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        ambient = self.dim + 1
        if n == 0:
            return np.empty((0, ambient))
        if self.kind == "uniform":
            return _unit_rows(gen, n, ambient)
        components = gen.choice(self.means.shape[0], size=n, p=self.weights)
        out = np.empty((n, ambient))
        for j in range(self.means.shape[0]):
            mask = components == j
            count = int(mask.sum())
            if count:
                out[mask] = _vmf_sample(self.means[j], float(self.kappas[j]), count, gen)
        return out

    def density(self, points: np.ndarray) -> np.ndarray:
        """Density with respect to the sphere's surface measure, per row."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "uniform":
            return np.full(pts.shape[0], 1.0 / sphere_area(self.dim))
        out = np.zeros(pts.shape[0])
        for j in range(self.means.shape[0]):
            log_c = _log_vmf_normalizer(float(self.kappas[j]), self.dim)
            out += self.weights[j] * np.exp(log_c + self.kappas[j] * (pts @ self.means[j]))
        return out


@dataclass(frozen=True)
class LabelModel:
    """Conditional label model: P(Y = +1 | X = x) = eta(x), labels +-1,
    so |Y| <= bound = 1 and the regression function is 2 eta - 1."""

    kind: str
    level: float = 0.5
    direction: np.ndarray | None = None

    bound: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if not 0.0 <= self.level <= 1.0:
                raise ValueError("constant eta level must lie in [0, 1]")
            return
        if self.kind not in ("cosine", "hemisphere"):
            raise ValueError(f"unknown label model kind {self.kind!r}")
        direction = np.asarray(self.direction, dtype=float)
        norm = float(np.linalg.norm(direction))
        if direction.ndim != 1 or norm == 0.0:
            raise ValueError("direction must be a nonzero vector")
        object.__setattr__(self, "direction", _freeze(direction / norm))

    @classmethod
    def constant(cls, level: float) -> "LabelModel":
        return cls("constant", level=level)

    @classmethod
    def cosine(cls, direction) -> "LabelModel":
        """eta(x) = (1 + x . v) / 2: noisy everywhere except the poles."""
        return cls("cosine", direction=direction)

    @classmethod
    def hemisphere(cls, direction) -> "LabelModel":
        """eta(x) = 1{x . v >= 0}: noiseless labels, zero Bayes risk."""
        return cls("hemisphere", direction=direction)

    def eta(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.kind == "constant":
            return np.full(pts.shape[0], self.level)
        projection = pts @ self.direction
        if self.kind == "cosine":
            return np.clip((1.0 + projection) / 2.0, 0.0, 1.0)
        return (projection >= 0.0).astype(float)

    def regression_truth(self, points: np.ndarray) -> np.ndarray:
        """The conditional mean 2 eta(x) - 1, bounded by 1 in magnitude."""
        return 2.0 * self.eta(points) - 1.0


def sample_points(dist: SphereDistribution, n: int, gen: np.random.Generator) -> np.ndarray:
    """n independent draws from the distribution (rows of (n, d+1))."""
    return dist.sample(n, gen)


def sample_labels(points: np.ndarray, model: LabelModel, gen: np.random.Generator) -> np.ndarray:
    """Independent +-1 labels, +1 with probability eta at each point."""
    eta = model.eta(points)
    return np.where(gen.random(eta.size) < eta, 1.0, -1.0)


def sample_dataset(
    dist: SphereDistribution,
    model: LabelModel,
    n: int,
    points_gen: np.random.Generator,
    labels_gen: np.random.Generator,
) -> LabeledDataset:
    points = sample_points(dist, n, points_gen)
    return LabeledDataset(points, sample_labels(points, model, labels_gen))


def bayes_risk(
    dist: SphereDistribution,
    model: LabelModel,
    n_mc: int,
    gen: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo estimate (mean, stderr) of the Bayes risk
    E[min(eta(X), 1 - eta(X))], the best achievable misclassification
    probability."""
    if n_mc < 2:
        raise ValueError("n_mc must be at least 2")
    eta = model.eta(dist.sample(n_mc, gen))
    values = np.minimum(eta, 1.0 - eta)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n_mc))
