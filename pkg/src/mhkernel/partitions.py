"""Hyperplane-arrangement partitions of the sphere, histogram scores over
them, and Monte Carlo estimation of the weighted ensemble kernel and
margin.

An arrangement is a (d+1) x h matrix W of hyperplane normals; the sign
pattern of W^T x assigns each sphere point to a cell, with the
convention sgn(0) := +1 (the tie has probability zero under Gaussian
normals, so any fixed convention is valid; a fixed one keeps runs
deterministic).  h = 0 is the trivial one-cell partition.

Monte Carlo contract
--------------------
``mc_kernel_estimate`` averages weight(h) * 1{same cell} over
arrangements drawn with Gaussian(0, 1) entries and sizes h from the
configured mass function; its expectation is the closed-form kernel
angle^q whenever angle > 0.  ``mc_ensemble_margin`` averages
weight(h) * histogram_score and is unbiased for
sum_i y_i * angle(x, X_i)^q by linearity.

Sampling is embarrassingly parallel: the sample budget is split into
fixed-size chunks, chunk i draws from the substream ``stream.child(i)``,
and per-chunk moments are merged in chunk order.  Results are therefore
bitwise identical for any worker count.

Variance guard
--------------
The estimator's second moment at separation angle a (phi = a/pi) is

    pi^(2q) * sum_h pmf(h)^(-1) * binom(q, h)^2 * (1 - phi)^h,

finite iff the pmf tail decays more slowly than (1 - phi)^h.  For the
geometric family with ratio r this means r > 1 - phi.  Expectations are
exact regardless, but with an infinite second moment the sample mean
converges uselessly slowly, so desk-scale runs are refused unless
r > 1 - phi + GUARD_SLACK.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .data import LabeledDataset
from .geometry import SpherePoint, _freeze, sphere_angles
from .kernels import WrpConfig, _alternating_magnitudes, wrp_weight_table
from .rng import RngStream

GUARD_SLACK = 0.05

# Points are packed 48 to a word when reducing sign patterns, keeping the
# float matmul that does the packing exact (48 < 53 mantissa bits).
_BITS_PER_GROUP = 48

# Per-chunk temporaries (the projection matrix above all) stay cache-sized
# at this sample count for geometric means around 10 hyperplanes.
_DEFAULT_CHUNK = 1 << 14

CellId = tuple[int, ...]


@dataclass(frozen=True)
class HyperplaneArrangement:
    """Normals of h hyperplanes through the origin of R^{d+1}, stored as
    the columns of a (d+1) x h matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.matrix, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("ambient dimension must be at least 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix must be finite")
        object.__setattr__(self, "matrix", _freeze(arr))

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def h(self) -> int:
        return self.matrix.shape[1]


def _point_coords(point, ambient_dim: int) -> np.ndarray:
    coords = point.coords if isinstance(point, SpherePoint) else np.asarray(point, dtype=float)
    if coords.shape != (ambient_dim,):
        raise ValueError(f"point has shape {coords.shape}, expected ({ambient_dim},)")
    return coords


def sign_pattern(arrangement: HyperplaneArrangement, x) -> CellId:
    """Componentwise sign of W^T x with sgn(0) := +1; the empty pattern
    identifies the single cell of the trivial partition."""
    coords = _point_coords(x, arrangement.ambient_dim)
    proj = arrangement.matrix.T @ coords
    return tuple(1 if p >= 0.0 else -1 for p in proj)


def same_cell(arrangement: HyperplaneArrangement, x, z) -> bool:
    """Whether x and z fall in the same cell, i.e. share a sign pattern.
    Symmetric in x and z, and always true when h = 0 or x = z."""
    xc = _point_coords(x, arrangement.ambient_dim)
    zc = _point_coords(z, arrangement.ambient_dim)
    return bool(
        np.all((arrangement.matrix.T @ xc >= 0.0) == (arrangement.matrix.T @ zc >= 0.0))
    )


def histogram_score(x, data: LabeledDataset, arrangement: HyperplaneArrangement) -> float:
    """Sum of labels over the training points sharing the query's cell.

    Integer-valued in [-n, n] when labels are +-1.  Depends on the data
    only through cell membership, so it is exactly invariant under
    dataset reordering.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    xc = _point_coords(x, arrangement.ambient_dim)
    query_sides = arrangement.matrix.T @ xc >= 0.0
    point_sides = data.points @ arrangement.matrix >= 0.0
    in_cell = np.all(point_sides == query_sides, axis=1)
    return float(data.labels @ in_cell)


def sample_arrangement(cfg: WrpConfig, gen: np.random.Generator) -> HyperplaneArrangement:
    """Draw one arrangement: size h from the configured mass function,
    then (d+1) x h independent Gaussian(0, 1) entries."""
    h = cfg.h_pmf.sample(gen)
    return HyperplaneArrangement(gen.standard_normal((cfg.dim + 1, h)))


class McEstimate(NamedTuple):
    mean: float
    stderr: float


@dataclass(frozen=True)
class RunningMoments:
    """Single-pass count/mean/M2 moments that merge associatively, so
    chunked parallel runs reduce deterministically in chunk order."""

    count: int
    mean: float
    m2: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> "RunningMoments":
        n = int(values.size)
        if n == 0:
            return cls(0, 0.0, 0.0)
        mean = float(np.mean(values))
        return cls(n, mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningMoments(n, mean, m2)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return math.nan
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def _segment_mismatch_any(mismatch: np.ndarray, heights: np.ndarray) -> np.ndarray:
    """OR-reduce mismatch rows over contiguous per-sample segments.

    ``mismatch`` is (total_columns, n_points) boolean with segment k
    occupying ``heights[k]`` consecutive rows; empty segments reduce to
    all-False.  Columns are packed into 48-bit words so the reduction is
    a single ``bitwise_or.reduceat`` per group.
    """
    n_samples = heights.size
    n_points = mismatch.shape[1]
    out = np.zeros((n_samples, n_points), dtype=bool)
    nonempty = heights > 0
    if mismatch.shape[0] == 0 or n_points == 0 or not nonempty.any():
        return out
    starts = (np.cumsum(heights) - heights)[nonempty].astype(np.intp)
    for lo in range(0, n_points, _BITS_PER_GROUP):
        width = min(_BITS_PER_GROUP, n_points - lo)
        powers = np.power(2.0, np.arange(width))
        packed = (mismatch[:, lo : lo + width] @ powers).astype(np.uint64)
        orred = np.bitwise_or.reduceat(packed, starts)
        bits = (orred[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1)
        out[nonempty, lo : lo + width] = bits.astype(bool)
    return out


# With at most this many points, per-column sign patterns pack into one
# 16-bit word (query bit plus point bits) and per-sample scores come from
# a lookup table over mismatch masks.
_TABLE_MAX_POINTS = 15


def _make_weighted_score_fn(
    query: np.ndarray,
    points: np.ndarray,
    labels: np.ndarray,
    cfg: WrpConfig,
) -> Callable[[int, np.random.Generator], np.ndarray]:
    """Build the per-chunk sampler of weight(h_t) * histogram_score values.

    Heights are drawn first, then all Gaussian normals in one block;
    per-sample cell membership comes from OR-reducing per-column mismatch
    bits over each sample's segment of columns.
    """
    stacked = np.vstack([query, points]).T
    n_points = points.shape[0]
    if n_points <= _TABLE_MAX_POINTS:
        # score_table[m] = sum of labels over points whose mismatch bit is
        # clear in m; index 0 is the full label sum (h = 0 samples).
        mask_bits = (np.arange(1 << n_points)[:, None] >> np.arange(n_points)) & 1
        score_table = (1 - mask_bits).astype(float) @ labels
        wide = n_points > 7  # query bit + point bits spill into a second byte
        word = np.uint16 if wide else np.uint8
        point_mask = word((1 << n_points) - 1)

        def values(count: int, gen: np.random.Generator) -> np.ndarray:
            heights = cfg.h_pmf.sample(gen, count)
            total = int(heights.sum())
            normals = gen.standard_normal((total, stacked.shape[0]))
            sides = normals @ stacked >= 0.0
            # bit 0 is the query's side; XOR spreads it over the point bits
            packed = np.packbits(sides, axis=1, bitorder="little")
            packed = packed.view("<u2").ravel() if wide else packed.ravel()
            masks = (packed >> word(1)) ^ ((packed & word(1)) * point_mask)
            scores = np.full(count, score_table[0])
            nonempty = heights > 0
            if total and nonempty.any():
                starts = (np.cumsum(heights) - heights)[nonempty].astype(np.intp)
                scores[nonempty] = score_table[np.bitwise_or.reduceat(masks, starts)]
            weights = wrp_weight_table(cfg, int(heights.max(initial=0)))
            return weights[heights] * scores

    else:

        def values(count: int, gen: np.random.Generator) -> np.ndarray:
            heights = cfg.h_pmf.sample(gen, count)
            total = int(heights.sum())
            normals = gen.standard_normal((total, stacked.shape[0]))
            sides = normals @ stacked >= 0.0
            mismatch = sides[:, 1:] != sides[:, :1]
            in_cell = ~_segment_mismatch_any(mismatch, heights)
            scores = in_cell @ labels
            weights = wrp_weight_table(cfg, int(heights.max(initial=0)))
            return weights[heights] * scores

    return values


def _chunk_counts(n_samples: int, chunk_size: int) -> list[int]:
    full, rest = divmod(n_samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _mc_run(
    value_fn: Callable[[int, np.random.Generator], np.ndarray],
    n_samples: int,
    stream: RngStream,
    chunk_size: int,
    threads: int,
) -> McEstimate:
    counts = _chunk_counts(n_samples, chunk_size)

    def worker(item: tuple[int, int]) -> RunningMoments:
        index, count = item
        return RunningMoments.from_values(value_fn(count, stream.child(index).generator()))

    items = list(enumerate(counts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(worker, items))
    else:
        parts = [worker(item) for item in items]
    acc = RunningMoments(0, 0.0, 0.0)
    for part in parts:
        acc = acc.merge(part)
    return McEstimate(acc.mean, acc.stderr)


def mc_kernel_estimate(
    x,
    z,
    cfg: WrpConfig,
    n_samples: int,
    stream: RngStream,
    *,
    chunk_size: int = _DEFAULT_CHUNK,
    threads: int = 1,
) -> McEstimate:
    """Sample mean and standard error of weight(h) * 1{x, z share a cell}
    over independently drawn arrangements.

    Unbiased for the closed-form kernel angle(x, z)^q when the angle is
    positive.  At zero angle the target is +inf and the running mean
    grows without bound; callers wanting the kernel there should branch
    to the closed form instead.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    ambient = cfg.dim + 1
    xc = _point_coords(x, ambient)
    zc = _point_coords(z, ambient)
    values = _make_weighted_score_fn(xc, zc[None, :], np.ones(1), cfg)
    return _mc_run(values, n_samples, stream, chunk_size, threads)


def mc_ensemble_margin(
    x,
    data: LabeledDataset,
    cfg: WrpConfig,
    n_samples: int,
    stream: RngStream,
    *,
    chunk_size: int = _DEFAULT_CHUNK,
    threads: int = 1,
) -> McEstimate:
    """Sample mean and standard error of weight(h) * histogram_score over
    independently drawn arrangements; unbiased for the closed-form
    margin sum_i y_i * angle(x, X_i)^q.

    The query must be distinct from every training point: at a
    coincident query the expectation is infinite, and the smoothing
    estimator's interpolation branch is the defined behavior there.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if len(data) == 0:
        raise ValueError("dataset is empty")
    ambient = cfg.dim + 1
    xc = _point_coords(x, ambient)
    if data.ambient_dim != ambient:
        raise ValueError("dataset ambient dimension does not match the configuration")
    angles = sphere_angles(xc, data.points)
    if float(angles.min()) <= 1e-12:
        raise ValueError(
            "query coincides with a training point; the ensemble margin is infinite "
            "there, use the interpolation branch of the smoothing estimator"
        )
    values = _make_weighted_score_fn(xc, data.points, data.labels, cfg)
    return _mc_run(values, n_samples, stream, chunk_size, threads)


def required_ratio(min_angle: float) -> float:
    """Smallest geometric ratio the variance guard accepts when the
    closest pair in play is separated by ``min_angle``."""
    return 1.0 - min_angle / math.pi + GUARD_SLACK


def passes_variance_guard(cfg: WrpConfig, min_angle: float) -> bool:
    """Whether the estimator's second moment is comfortably finite for
    separation angles down to ``min_angle`` (see module docstring)."""
    return cfg.h_pmf.ratio > required_ratio(min_angle)


def estimator_second_moment(angle: float, cfg: WrpConfig, h_max: int = 4000) -> float:
    """Truncated second moment of the kernel estimator at a separation
    angle; used to sanity-check reported standard errors."""
    if not 0.0 < angle <= math.pi:
        raise ValueError("angle must lie in (0, pi]")
    phi = angle / math.pi
    h = np.arange(h_max + 1)
    mags = _alternating_magnitudes(cfg.q, h_max)
    terms = mags**2 * (1.0 - phi) ** h / cfg.h_pmf.pmf(h)
    return float(math.pi ** (2 * cfg.q) * terms.sum())


def cube_partition_cell(n_grid: int, x) -> CellId:
    """Cell index of x in the regular partition of the unit cube into
    n_grid^d axis-aligned cells: (floor(n*x_1), ..., floor(n*x_d)), with
    the boundary value 1 mapped into the last cell."""
    if n_grid < 1:
        raise ValueError("n_grid must be positive")
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("x must be a vector")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("components must lie in [0, 1]")
    idx = np.minimum(np.floor(n_grid * arr).astype(int), n_grid - 1)
    return tuple(int(i) for i in idx)
