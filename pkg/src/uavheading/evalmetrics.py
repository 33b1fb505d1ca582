"""Heading-error metrics in degrees and the multi-seed robustness sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .net import MlpParams, TrainConfig, forward, train

CI_Z = 1.96


@dataclass(frozen=True)
class RegMetrics:
    mse: float
    mae: float
    rmse: float
    max_ae: float
    n: int


def wrapped_residuals_deg(preds, truths) -> np.ndarray:
    p = np.asarray(preds, dtype=float).reshape(-1)
    t = np.asarray(truths, dtype=float).reshape(-1)
    if len(p) != len(t):
        raise ValueError(f"{len(p)} predictions for {len(t)} targets")
    if len(p) == 0:
        raise ValueError("no predictions to score")
    d = p - t
    # same convention as geom.wrap_angle: (-pi, pi]
    w = np.remainder(d + math.pi, 2 * math.pi) - math.pi
    w[w == -math.pi] = math.pi
    return np.degrees(w)


def regression_metrics(preds, truths) -> RegMetrics:
    """MSE/MAE/RMSE/MaxAE of wrapped residuals, all in degrees."""
    r = wrapped_residuals_deg(preds, truths)
    a = np.abs(r)
    rmse = math.sqrt(float(np.mean(r * r)))
    # mse stored as rmse*rmse: within 1 ulp of the raw mean, and both
    # rmse**2 == mse and sqrt(mse) == rmse then hold bit for bit
    mse = rmse * rmse
    return RegMetrics(mse=mse, mae=float(np.mean(a)), rmse=rmse, max_ae=float(a.max()), n=len(r))


@dataclass(frozen=True)
class SeedRun:
    seed: int
    metrics: RegMetrics
    final_train_loss: float
    final_val_loss: float


@dataclass(frozen=True)
class SweepSummary:
    runs: tuple[SeedRun, ...]
    mean_max_ae: float
    std_max_ae: float
    ci95_max_ae: float
    frac_max_ae_below_1: float
    mean_mae: float
    std_mae: float
    mean_rmse: float
    std_rmse: float

    @property
    def n_seeds(self) -> int:
        return len(self.runs)


def _mean_std(v) -> tuple[float, float]:
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0


def ci_halfwidth(std: float, n: int) -> float:
    return CI_Z * std / math.sqrt(n)


def summarize(runs) -> SweepSummary:
    """Aggregate per-seed runs; order-fixed by seed so the result is reproducible."""
    runs = tuple(sorted(runs, key=lambda r: r.seed))
    if len(runs) < 2:
        raise ValueError("a sweep needs at least 2 runs")
    mx = [r.metrics.max_ae for r in runs]
    m_max, s_max = _mean_std(mx)
    m_mae, s_mae = _mean_std([r.metrics.mae for r in runs])
    m_rmse, s_rmse = _mean_std([r.metrics.rmse for r in runs])
    return SweepSummary(
        runs=runs,
        mean_max_ae=m_max,
        std_max_ae=s_max,
        ci95_max_ae=ci_halfwidth(s_max, len(runs)),
        frac_max_ae_below_1=sum(v < 1.0 for v in mx) / len(runs),
        mean_mae=m_mae,
        std_mae=s_mae,
        mean_rmse=m_rmse,
        std_rmse=s_rmse,
    )


def seed_sweep(base: TrainConfig, n_seeds: int, train_xy, val_xy, test_xy,
               seeds=None, on_run=None) -> SweepSummary:
    """Retrain with n_seeds seeds (base.seed, base.seed+1, ...) and score the fixed test split."""
    if n_seeds < 2:
        raise ValueError("n_seeds must be >= 2")
    seeds = list(range(base.seed, base.seed + n_seeds)) if seeds is None else list(seeds)
    if len(seeds) != n_seeds:
        raise ValueError("explicit seed list must have n_seeds entries")
    runs = []
    for s in seeds:
        try:
            res = train(*train_xy, *val_xy, replace(base, seed=s))
            m = evaluate(res.params, *test_xy)
        except Exception as e:
            raise RuntimeError(f"seed {s}: {e}") from e
        run = SeedRun(s, m, res.train_loss[-1], res.val_loss[-1])
        runs.append(run)
        if on_run is not None:
            on_run(run)
    return summarize(runs)


def evaluate(params: MlpParams, x, y) -> RegMetrics:
    return regression_metrics(forward(params, x), y)


def histogram(values, bin_width: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Counts on a grid of multiples of bin_width; returns (left_edges, counts).

    Bins span [k w, (k+1) w); a constant input falls into exactly one bin.
    """
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return np.array([]), np.array([], dtype=int)
    k = np.floor(v / bin_width).astype(int)
    lo, hi = k.min(), k.max()
    counts = np.bincount(k - lo, minlength=hi - lo + 1)
    return (np.arange(lo, hi + 1) * bin_width), counts
