"""Closed-form singular kernels and the weight/series machinery for the
random hyperplane-arrangement ensemble.

Kernel values live on the extended half-line [0, +inf]: ``math.inf``
encodes the singular diagonal K(x, x) = inf.  IEEE arithmetic already
gives finite + inf = inf, and the one forbidden form inf/inf never
arises because the smoothing estimator branches on exact coincidence
before summing.  Kernel values are never negative and never NaN.

The ensemble machinery is parametrized by ``WrpConfig``: an exponent
q < 0 and a probability mass function over arrangement sizes h.  The
ensemble weight for size h is

    weight(h) = pi^q * pmf(h)^(-1) * (-1)^h * binom(q, h),

which is strictly positive for q < 0, and the closed form of the
resulting kernel at separation angle a in (0, pi] is a^q, with +inf at
a = 0 where the underlying binomial series diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

# Series truncation defaults: the tail is geometric with rate
# (1 - angle/pi), so 400 terms is ample for angle >= 0.1*pi.
SERIES_H_MAX = 400
SERIES_REL_TOL = 1e-10


@dataclass(frozen=True)
class GeometricPmf:
    """Geometric mass function over arrangement sizes h in {0, 1, 2, ...}:
    p(h) = (1 - ratio) * ratio^h.

    Every h has positive mass, as the ensemble weights require.  Heavier
    tails (ratio closer to 1) keep the Monte Carlo estimator's variance
    finite at smaller separation angles; see ``partitions``.
    """

    ratio: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie strictly between 0 and 1")

    def pmf(self, h):
        """Mass at h (scalar or array of nonnegative integers)."""
        h_arr = np.asarray(h)
        if np.any(h_arr < 0):
            raise ValueError("h must be nonnegative")
        out = (1.0 - self.ratio) * self.ratio ** h_arr.astype(float)
        return float(out) if np.isscalar(h) or h_arr.ndim == 0 else out

    def sample(self, gen: np.random.Generator, size=None):
        """Draw sizes h; numpy's geometric has support {1, 2, ...} with
        success probability 1 - ratio, so shift down by one."""
        draws = gen.geometric(1.0 - self.ratio, size=size)
        if size is None:
            return int(draws) - 1
        return draws.astype(np.int64) - 1

    @property
    def mean(self) -> float:
        return self.ratio / (1.0 - self.ratio)


@dataclass(frozen=True)
class WrpConfig:
    """Parameters of the weighted random hyperplane-arrangement ensemble
    on the d-sphere: exponent q < 0 and the size distribution."""

    dim: int
    q: float
    h_pmf: GeometricPmf = field(default_factory=GeometricPmf)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if not (math.isfinite(self.q) and self.q < 0.0):
            raise ValueError("q must be a finite negative number")


def manifold_hilbert_kernel(dist: float, dim: int) -> float:
    """dist^(-dim), with +inf at zero distance (the singular diagonal)."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if dist < 0.0:
        raise ValueError("distance must be nonnegative")
    if dist == 0.0:
        return math.inf
    return dist ** float(-dim)


def generalized_binomial(q: float, h: int) -> float:
    """Generalized binomial coefficient binom(q, h) =
    (1/h!) * prod_{j=0}^{h-1} (q - j), with the empty product 1 at h = 0.

    Computed as an iterative product of ratios so large h neither
    overflows nor touches integer factorials.
    """
    if h < 0:
        raise ValueError("h must be nonnegative")
    out = 1.0
    for j in range(int(h)):
        out *= (q - j) / (j + 1)
    return out


def _alternating_magnitudes(q: float, h_max: int) -> np.ndarray:
    """(-1)^h * binom(q, h) for h = 0..h_max; strictly positive for q < 0.

    Uses the recurrence m_h = m_{h-1} * (h - 1 - q) / h.
    """
    if h_max < 0:
        raise ValueError("h_max must be nonnegative")
    steps = np.arange(1, h_max + 1, dtype=float)
    factors = (steps - 1.0 - q) / steps
    return np.concatenate(([1.0], np.cumprod(factors)))


def wrp_weight(cfg: WrpConfig, h: int) -> float:
    """Ensemble weight pi^q * pmf(h)^(-1) * (-1)^h * binom(q, h) > 0."""
    return math.pi ** cfg.q / cfg.h_pmf.pmf(h) * ((-1.0) ** h * generalized_binomial(cfg.q, h))


def wrp_weight_table(cfg: WrpConfig, h_max: int) -> np.ndarray:
    """Vectorized ensemble weights for h = 0..h_max."""
    h = np.arange(h_max + 1)
    return math.pi ** cfg.q * _alternating_magnitudes(cfg.q, h_max) / cfg.h_pmf.pmf(h)


def wrp_kernel_closed_form(angle: float, cfg: WrpConfig) -> float:
    """Closed form of the ensemble kernel at a separation angle in
    [0, pi]: angle^q, and +inf at angle 0.

    With q = -dim this equals ``manifold_hilbert_kernel`` bit for bit on
    the finite branch.
    """
    if not 0.0 <= angle <= math.pi:
        raise ValueError("angle must lie in [0, pi]")
    if angle == 0.0:
        return math.inf
    return angle ** cfg.q


def wrp_series_partial_sums(angle: float, cfg: WrpConfig, h_max: int) -> np.ndarray:
    """Partial sums pi^q * sum_{h=0}^{H} binom(q, h) (angle/pi - 1)^h for
    H = 0..h_max.

    Every term is nonnegative for q < 0, so the sums are nondecreasing
    and climb monotonically toward ``wrp_kernel_closed_form``.  The
    series diverges at angle = 0, hence the strict positivity
    requirement.
    """
    if not 0.0 < angle <= math.pi:
        raise ValueError("angle must lie in (0, pi]; the series diverges at 0")
    if h_max < 0:
        raise ValueError("h_max must be nonnegative")
    phi = angle / math.pi
    terms = _alternating_magnitudes(cfg.q, h_max) * (1.0 - phi) ** np.arange(h_max + 1)
    return math.pi ** cfg.q * np.cumsum(terms)


class SeriesResult(NamedTuple):
    value: float
    truncated: bool


def wrp_kernel_series(
    angle: float,
    cfg: WrpConfig,
    h_max: int = SERIES_H_MAX,
    rel_tol: float = SERIES_REL_TOL,
) -> SeriesResult:
    """Truncated series evaluation of the ensemble kernel at an angle in
    (0, pi].

    Returns the partial sum through h_max and a flag reporting whether
    the truncation had converged: the flag is set when the first omitted
    term still exceeds ``rel_tol`` relative to the sum.  Callers must use
    the closed-form +inf branch at angle 0.
    """
    sums = wrp_series_partial_sums(angle, cfg, h_max + 1)
    value = float(sums[h_max])
    omitted = float(sums[h_max + 1] - sums[h_max])
    return SeriesResult(value, omitted > rel_tol * value)


def same_cell_probability(angle: float, h: int) -> float:
    """Probability that two points at the given separation angle share a
    cell of an arrangement of h independent Gaussian hyperplanes:
    (1 - angle/pi)^h.

    Each hyperplane separates the pair independently with probability
    angle/pi; h = 0 is the trivial one-cell partition, so the result is 1.
    """
    if not 0.0 <= angle <= math.pi:
        raise ValueError("angle must lie in [0, pi]")
    if h < 0:
        raise ValueError("h must be nonnegative")
    return (1.0 - angle / math.pi) ** int(h)
