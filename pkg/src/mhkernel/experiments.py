"""Config-driven experiment runners that check the library's claims at
desk scale and emit CSV rows plus JSON summaries.

Each runner derives every random draw from named substreams of the
config seed, merges results in a fixed row order, and computes its
verdicts from the very rows it writes, so a rerun with the same config
is byte-identical on the CSV side regardless of the worker count.

Experiments
-----------
collision           empirical same-cell frequency of Gaussian hyperplane
                    arrangements against the law (1 - angle/pi)^h.
kernel-equivalence  closed form angle^q vs truncated series vs Monte
                    Carlo ensemble estimate.
interpolation       the smoother returns every training label exactly,
                    even under pure-noise labels.
consistency         classification excess risk and L1 regression error
                    shrink as the training size grows.  The trend
                    verdict is a desk-scale proxy for an asymptotic
                    statement, not a proof.
ensemble-agreement  Monte Carlo ensemble margins against the closed-form
                    margin and the smoothing classifier's sign.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .data import LabeledDataset
from .estimators import KernelSmoothingRegressor
from .geometry import Sphere, sphere_angles
from .kernels import (
    GeometricPmf,
    WrpConfig,
    same_cell_probability,
    wrp_kernel_closed_form,
    wrp_kernel_series,
)
from .partitions import (
    GUARD_SLACK,
    mc_ensemble_margin,
    mc_kernel_estimate,
    passes_variance_guard,
    required_ratio,
)
from .rng import RngStream
from .smoothing import (
    INTERPOLATION,
    KernelSpec,
    ensemble_classify,
    kernel_smooth_regress,
    l1_error_estimate,
)
from .synthdata import LabelModel, SphereDistribution, bayes_risk, sample_labels, sample_points

# Top-level substream ids, one per experiment.
_S_COLLISION = 1
_S_EQUIVALENCE = 2
_S_INTERPOLATION = 3
_S_CONSISTENCY = 4
_S_AGREEMENT = 5

try:
    _PKG_VERSION = metadata.version("mhkernel")
except Exception:  # pragma: no cover - only hit when run from a raw checkout
    _PKG_VERSION = "0.0.0+unknown"


class ConfigError(ValueError):
    """Invalid experiment configuration (bad value or refused guard)."""


_LABEL_MODELS = ("cosine", "hemisphere", "constant")
_DISTRIBUTIONS = ("uniform", "vmf")


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for all experiments; JSON config files use the same keys and
    command-line flags override individual fields."""

    dim: int = 2
    q: float = -2.0
    ratio: float = 0.9
    seed: int = 0
    out: str = "results"
    threads: int = 1

    n_train: tuple[int, ...] = (100, 500, 2000)
    n_queries: int = 500
    n_mc: int = 1_000_000
    n_seeds: int = 20

    collision_angle_fractions: tuple[float, ...] = (1 / 6, 1 / 4, 1 / 2, 3 / 4)
    collision_h: tuple[int, ...] = (1, 3)
    collision_samples: int = 100_000

    equivalence_angle_fractions: tuple[float, ...] = (1 / 4, 1 / 2, 3 / 4, 1.0)
    series_h_max: int = 400
    series_tol: float = 1e-8

    interpolation_n: int = 200
    interpolation_seeds: int = 10

    agreement_datasets: int = 10
    agreement_queries: int = 50
    agreement_points: int = 10
    agreement_n_mc: int = 200_000

    excess_threshold: float = 0.05
    bayes_n_mc: int = 100_000

    distribution: str = "uniform"
    vmf_kappa: float = 5.0
    label_model: str = "cosine"
    label_level: float = 0.5

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with Path(path).open("r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f: t for f, t in cls.__dataclass_fields__.items()}
        unknown = set(raw) - set(known)
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        values = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
        return cls(**values)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        supplied = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **supplied)

    def validate(self) -> None:
        checks = [
            (self.dim >= 1, "dim must be at least 1"),
            (math.isfinite(self.q) and self.q < 0, "q must be negative"),
            (0.0 < self.ratio < 1.0, "ratio must lie strictly between 0 and 1"),
            (self.seed >= 0, "seed must be nonnegative"),
            (self.threads >= 1, "threads must be at least 1"),
            (len(self.n_train) >= 1 and all(n >= 1 for n in self.n_train), "n_train sizes must be positive"),
            (tuple(sorted(self.n_train)) == tuple(self.n_train), "n_train sizes must be ascending"),
            (self.n_queries >= 1, "n_queries must be positive"),
            (self.n_mc >= 2, "n_mc must be at least 2"),
            (self.n_seeds >= 1, "n_seeds must be positive"),
            (all(0.0 <= f <= 1.0 for f in self.collision_angle_fractions), "collision angles must be fractions of pi in [0, 1]"),
            (all(h >= 0 for h in self.collision_h), "collision h values must be nonnegative"),
            (self.collision_samples >= 2, "collision_samples must be at least 2"),
            (all(0.0 < f <= 1.0 for f in self.equivalence_angle_fractions), "equivalence angles must be fractions of pi in (0, 1]"),
            (self.series_h_max >= 0, "series_h_max must be nonnegative"),
            (self.series_tol > 0.0, "series_tol must be positive"),
            (self.interpolation_n >= 1, "interpolation_n must be positive"),
            (self.interpolation_seeds >= 1, "interpolation_seeds must be positive"),
            (self.agreement_datasets >= 1, "agreement_datasets must be positive"),
            (self.agreement_queries >= 1, "agreement_queries must be positive"),
            (self.agreement_points >= 1, "agreement_points must be positive"),
            (self.agreement_n_mc >= 2, "agreement_n_mc must be at least 2"),
            (self.excess_threshold > 0.0, "excess_threshold must be positive"),
            (self.bayes_n_mc >= 2, "bayes_n_mc must be at least 2"),
            (self.distribution in _DISTRIBUTIONS, f"distribution must be one of {_DISTRIBUTIONS}"),
            (self.vmf_kappa >= 0.0, "vmf_kappa must be nonnegative"),
            (self.label_model in _LABEL_MODELS, f"label_model must be one of {_LABEL_MODELS}"),
            (0.0 <= self.label_level <= 1.0, "label_level must lie in [0, 1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def wrp(self) -> WrpConfig:
        return WrpConfig(self.dim, self.q, GeometricPmf(self.ratio))

    def training_distribution(self) -> SphereDistribution:
        if self.distribution == "uniform":
            return SphereDistribution.uniform(self.dim)
        return SphereDistribution.vmf(_north_pole(self.dim), self.vmf_kappa)

    def labels(self) -> LabelModel:
        if self.label_model == "constant":
            return LabelModel.constant(self.label_level)
        if self.label_model == "cosine":
            return LabelModel.cosine(_north_pole(self.dim))
        return LabelModel.hemisphere(_north_pole(self.dim))


def _north_pole(dim: int) -> np.ndarray:
    pole = np.zeros(dim + 1)
    pole[-1] = 1.0
    return pole


def _point_at_angle(dim: int, angle: float) -> np.ndarray:
    point = np.zeros(dim + 1)
    point[0] = math.sin(angle)
    point[-1] = math.cos(angle)
    return point


def _version_string() -> str:
    root = Path(__file__).resolve().parent
    try:
        proc = subprocess.run(
            ["git", "-C", str(root), "describe", "--tags", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if proc.returncode == 0 and proc.stdout.strip():
            return proc.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{_PKG_VERSION}"


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _verdict_cell(passed: bool) -> str:
    return "pass" if passed else "fail"


@dataclass
class ExperimentReport:
    """Rows destined for CSV plus a JSON summary whose verdicts were
    computed from those same rows."""

    name: str
    columns: list[str]
    rows: list[dict]
    verdicts: dict[str, bool]
    summary: dict
    config: ExperimentConfig
    wall_time_seconds: float

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_format_cell(row[col]) for col in self.columns])
        json_path = out / f"{self.name}.summary.json"
        payload = {
            "experiment": self.name,
            "seed": self.config.seed,
            "version": _version_string(),
            "wall_time_seconds": self.wall_time_seconds,
            "config": asdict(self.config),
            "verdicts": self.verdicts,
            "summary": self.summary,
            "passed": self.passed,
        }
        with json_path.open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path


def _map_cells(worker, items, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, items))
    return [worker(item) for item in items]


def run_collision(config: ExperimentConfig) -> ExperimentReport:
    """Empirical same-cell frequency against (1 - angle/pi)^h, one row
    per (angle, h) cell, judged at 4 binomial standard errors."""
    config.validate()
    start = time.perf_counter()
    stream = RngStream(config.seed).child(_S_COLLISION)
    x = _north_pole(config.dim)
    n = config.collision_samples
    rows = []
    for ai, fraction in enumerate(config.collision_angle_fractions):
        angle = fraction * math.pi
        z = _point_at_angle(config.dim, angle)
        for hi, h in enumerate(config.collision_h):
            gen = stream.child(ai, hi).generator()
            normals = gen.standard_normal((n * h, config.dim + 1))
            agree = (normals @ x >= 0.0) == (normals @ z >= 0.0)
            same = agree.reshape(n, h).all(axis=1) if h else np.ones(n, dtype=bool)
            empirical = float(same.mean())
            theoretical = same_cell_probability(angle, h)
            stderr = math.sqrt(theoretical * (1.0 - theoretical) / n)
            if stderr == 0.0:
                z_score = 0.0 if empirical == theoretical else math.inf
            else:
                z_score = (empirical - theoretical) / stderr
            rows.append(
                {
                    "angle": angle,
                    "h": h,
                    "n_samples": n,
                    "empirical": empirical,
                    "theoretical": theoretical,
                    "stderr": stderr,
                    "z_score": z_score,
                    "verdict": _verdict_cell(abs(z_score) <= 4.0),
                }
            )
    verdicts = {"all_cells_within_4_sigma": all(r["verdict"] == "pass" for r in rows)}
    return ExperimentReport(
        name="collision",
        columns=["angle", "h", "n_samples", "empirical", "theoretical", "stderr", "z_score", "verdict"],
        rows=rows,
        verdicts=verdicts,
        summary={"n_cells": len(rows)},
        config=config,
        wall_time_seconds=time.perf_counter() - start,
    )


def run_kernel_equivalence(config: ExperimentConfig) -> ExperimentReport:
    """Closed form angle^q vs truncated series vs Monte Carlo estimate,
    one row per angle.  Refuses to run when the geometric ratio would
    leave the estimator's second moment (nearly) infinite at the
    smallest angle."""
    config.validate()
    start = time.perf_counter()
    wrp = config.wrp()
    angles = [f * math.pi for f in config.equivalence_angle_fractions]
    min_angle = min(angles)
    if not passes_variance_guard(wrp, min_angle):
        raise ConfigError(
            "variance guard: geometric ratio "
            f"{config.ratio} is not above {required_ratio(min_angle):.4f}, the "
            f"minimum for reliable Monte Carlo at angle {min_angle:.4f}; raise "
            "--ratio or drop the smallest angle"
        )
    stream = RngStream(config.seed).child(_S_EQUIVALENCE)
    x = _north_pole(config.dim)
    rows = []
    for ai, angle in enumerate(angles):
        z = _point_at_angle(config.dim, angle)
        closed = wrp_kernel_closed_form(angle, wrp)
        series = wrp_kernel_series(angle, wrp, config.series_h_max)
        mc = mc_kernel_estimate(
            x, z, wrp, config.n_mc, stream.child(ai), threads=config.threads
        )
        series_err = abs(series.value - closed)
        mc_err = abs(mc.mean - closed)
        ok = mc_err <= 5.0 * mc.stderr and series_err <= config.series_tol
        rows.append(
            {
                "angle": angle,
                "q": config.q,
                "closed_form": closed,
                "series_value": series.value,
                "series_truncated": series.truncated,
                "series_abs_err": series_err,
                "mc_mean": mc.mean,
                "mc_stderr": mc.stderr,
                "mc_abs_err": mc_err,
                "n_mc": config.n_mc,
                "verdict": _verdict_cell(ok),
            }
        )
    verdicts = {"all_angles_pass": all(r["verdict"] == "pass" for r in rows)}
    return ExperimentReport(
        name="kernel-equivalence",
        columns=[
            "angle", "q", "closed_form", "series_value", "series_truncated",
            "series_abs_err", "mc_mean", "mc_stderr", "mc_abs_err", "n_mc", "verdict",
        ],
        rows=rows,
        verdicts=verdicts,
        summary={"n_angles": len(rows)},
        config=config,
        wall_time_seconds=time.perf_counter() - start,
    )


def run_interpolation(config: ExperimentConfig) -> ExperimentReport:
    """Exact label recovery at every training point under pure-noise
    labels, one row per seed."""
    config.validate()
    start = time.perf_counter()
    stream = RngStream(config.seed).child(_S_INTERPOLATION)
    dist = SphereDistribution.uniform(config.dim)
    noise = LabelModel.constant(0.5)
    kernel = KernelSpec.manifold_hilbert(Sphere(config.dim))
    n = config.interpolation_n
    rows = []
    for s in range(config.interpolation_seeds):
        points = sample_points(dist, n, stream.child(s, 0).generator())
        labels = sample_labels(points, noise, stream.child(s, 1).generator())
        dataset = LabeledDataset(points, labels)
        dots = np.clip(points @ points.T, -1.0, 1.0)
        np.fill_diagonal(dots, -1.0)
        min_angle = float(np.arccos(dots.max())) if n > 1 else math.pi
        regress_exact = 0
        classify_exact = 0
        for i in range(n):
            estimate = kernel_smooth_regress(points[i], dataset, kernel)
            if estimate.branch == INTERPOLATION and estimate.value == labels[i]:
                regress_exact += 1
            if ensemble_classify(points[i], dataset, kernel) == labels[i]:
                classify_exact += 1
        ok = regress_exact == n and classify_exact == n
        rows.append(
            {
                "seed": s,
                "n_train": n,
                "n_regressor_exact": regress_exact,
                "n_classifier_exact": classify_exact,
                "min_pairwise_angle": min_angle,
                "verdict": _verdict_cell(ok),
            }
        )
    verdicts = {"all_training_points_recovered": all(r["verdict"] == "pass" for r in rows)}
    return ExperimentReport(
        name="interpolation",
        columns=["seed", "n_train", "n_regressor_exact", "n_classifier_exact", "min_pairwise_angle", "verdict"],
        rows=rows,
        verdicts=verdicts,
        summary={"n_seeds": config.interpolation_seeds},
        config=config,
        wall_time_seconds=time.perf_counter() - start,
    )


def run_consistency(config: ExperimentConfig) -> ExperimentReport:
    """Excess classification risk and L1 regression error on held-out
    queries across training sizes and seeds.

    Queries are sampled uniformly and reweighted by the training density
    (importance weights), so the L1 error estimates the integral of
    |fitted - true| against the data distribution even when training
    points are not uniform.  The monotone-trend verdict is a desk-scale
    proxy for asymptotic consistency, documented as such.
    """
    config.validate()
    start = time.perf_counter()
    stream = RngStream(config.seed).child(_S_CONSISTENCY)
    dist = config.training_distribution()
    model = config.labels()
    uniform = SphereDistribution.uniform(config.dim)

    queries = sample_points(uniform, config.n_queries, stream.child(0).generator())
    eta_q = model.eta(queries)
    truth_q = model.regression_truth(queries)
    density = dist.density(queries)
    weights = density / density.sum()
    cond_bayes = np.minimum(eta_q, 1.0 - eta_q)
    bayes_queryset = float(weights @ cond_bayes)
    bayes_queryset_se = math.sqrt(float(np.sum(weights**2 * (cond_bayes - bayes_queryset) ** 2)))
    bayes_mc, bayes_mc_se = bayes_risk(dist, model, config.bayes_n_mc, stream.child(3).generator())

    def cell(item: tuple[int, int, int]) -> dict:
        ni, n, s = item
        points = sample_points(dist, n, stream.child(1, ni, s).generator())
        labels = sample_labels(points, model, stream.child(2, ni, s).generator())
        smoother = KernelSmoothingRegressor(manifold="sphere").fit(points, labels)
        fitted = smoother.predict(queries)
        predictions = np.where(fitted >= 0.0, 1.0, -1.0)
        cond_risk = np.where(predictions > 0.0, 1.0 - eta_q, eta_q)
        return {
            "n_train": n,
            "seed": s,
            "classif_error": float(weights @ cond_risk),
            "excess_over_bayes": float(weights @ (cond_risk - cond_bayes)),
            "j1_hat": l1_error_estimate(fitted, truth_q, weights),
        }

    items = [(ni, n, s) for ni, n in enumerate(config.n_train) for s in range(config.n_seeds)]
    rows = _map_cells(cell, items, config.threads)

    medians = {}
    for n in config.n_train:
        excesses = [r["excess_over_bayes"] for r in rows if r["n_train"] == n]
        j1s = [r["j1_hat"] for r in rows if r["n_train"] == n]
        medians[n] = {"excess": float(np.median(excesses)), "j1": float(np.median(j1s))}
    smallest, largest = config.n_train[0], config.n_train[-1]
    j1_series = [medians[n]["j1"] for n in config.n_train]
    verdicts = {
        "excess_shrinks_with_n": medians[largest]["excess"] <= medians[smallest]["excess"],
        "excess_below_threshold": medians[largest]["excess"] <= config.excess_threshold,
        "j1_medians_strictly_decreasing": all(a > b for a, b in zip(j1_series, j1_series[1:])),
        "bayes_risk_echoed": abs(bayes_queryset - bayes_mc)
        <= 4.0 * math.sqrt(bayes_queryset_se**2 + bayes_mc_se**2),
    }
    summary = {
        "medians": {str(n): medians[n] for n in config.n_train},
        "bayes_risk_queryset": bayes_queryset,
        "bayes_risk_queryset_stderr": bayes_queryset_se,
        "bayes_risk_mc": bayes_mc,
        "bayes_risk_mc_stderr": bayes_mc_se,
        "excess_threshold": config.excess_threshold,
    }
    return ExperimentReport(
        name="consistency",
        columns=["n_train", "seed", "classif_error", "excess_over_bayes", "j1_hat"],
        rows=rows,
        verdicts=verdicts,
        summary=summary,
        config=config,
        wall_time_seconds=time.perf_counter() - start,
    )


def run_ensemble_agreement(config: ExperimentConfig) -> ExperimentReport:
    """Monte Carlo ensemble margins against the closed-form margin
    sum_i y_i angle^q, plus sign agreement with the smoothing classifier.

    Queries are drawn uniformly subject to a minimum angle from every
    training point: below that floor the variance guard fails and the
    Monte Carlo estimate is statistically useless, so such queries are
    resampled rather than reported.
    """
    config.validate()
    start = time.perf_counter()
    wrp = config.wrp()
    phi_floor = 1.0 - config.ratio + GUARD_SLACK
    if phi_floor >= 1.0:
        raise ConfigError(
            f"variance guard: ratio {config.ratio} leaves no admissible query "
            "angles; raise --ratio"
        )
    angle_floor = phi_floor * math.pi
    stream = RngStream(config.seed).child(_S_AGREEMENT)
    uniform = SphereDistribution.uniform(config.dim)
    noise = LabelModel.constant(0.5)
    kernel = KernelSpec.from_arrangement_config(wrp)

    datasets = []
    query_sets = []
    for d in range(config.agreement_datasets):
        points = sample_points(uniform, config.agreement_points, stream.child(d, 0).generator())
        labels = sample_labels(points, noise, stream.child(d, 1).generator())
        datasets.append(LabeledDataset(points, labels))
        gen = stream.child(d, 2).generator()
        accepted = []
        while len(accepted) < config.agreement_queries:
            batch = sample_points(uniform, config.agreement_queries - len(accepted), gen)
            for row in batch:
                if float(sphere_angles(row, points).min()) > angle_floor:
                    accepted.append(row)
        query_sets.append(np.asarray(accepted))

    def cell(item: tuple[int, int]) -> dict:
        d, qi = item
        dataset = datasets[d]
        query = query_sets[d][qi]
        angles = sphere_angles(query, dataset.points)
        closed = float(dataset.labels @ angles**config.q)
        mc = mc_ensemble_margin(
            query, dataset, wrp, config.agreement_n_mc, stream.child(d, 3, qi)
        )
        classifier_sign = ensemble_classify(query, dataset, kernel)
        mc_sign = 1.0 if mc.mean >= 0.0 else -1.0
        within = abs(mc.mean - closed) <= 5.0 * mc.stderr
        checked = abs(closed) > 5.0 * mc.stderr
        return {
            "dataset": d,
            "query": qi,
            "min_angle": float(angles.min()),
            "closed_margin": closed,
            "mc_mean": mc.mean,
            "mc_stderr": mc.stderr,
            "within_5_stderr": within,
            "sign_checked": checked,
            "mc_sign": mc_sign,
            "classifier_sign": classifier_sign,
            "sign_agree": (mc_sign == classifier_sign) if checked else True,
            "verdict": _verdict_cell(within),
        }

    items = [(d, qi) for d in range(config.agreement_datasets) for qi in range(config.agreement_queries)]
    rows = _map_cells(cell, items, config.threads)

    within_fraction = float(np.mean([r["within_5_stderr"] for r in rows]))
    checked_rows = [r for r in rows if r["sign_checked"]]
    sign_ok = all(r["sign_agree"] for r in checked_rows)
    verdicts = {
        "within_5_stderr_fraction_at_least_98pct": within_fraction >= 0.98,
        "sign_agreement_on_all_checked_cells": sign_ok,
    }
    summary = {
        "within_fraction": within_fraction,
        "n_cells": len(rows),
        "n_sign_checked": len(checked_rows),
        "query_angle_floor": angle_floor,
    }
    return ExperimentReport(
        name="ensemble-agreement",
        columns=[
            "dataset", "query", "min_angle", "closed_margin", "mc_mean", "mc_stderr",
            "within_5_stderr", "sign_checked", "mc_sign", "classifier_sign", "sign_agree", "verdict",
        ],
        rows=rows,
        verdicts=verdicts,
        summary=summary,
        config=config,
        wall_time_seconds=time.perf_counter() - start,
    )


RUNNERS = {
    "collision": run_collision,
    "kernel-equivalence": run_kernel_equivalence,
    "interpolation": run_interpolation,
    "consistency": run_consistency,
    "ensemble-agreement": run_ensemble_agreement,
}


def run_all(config: ExperimentConfig) -> list[ExperimentReport]:
    return [runner(config) for runner in RUNNERS.values()]
