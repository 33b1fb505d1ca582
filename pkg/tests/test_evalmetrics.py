import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavheading.evalmetrics import (
    RegMetrics,
    SeedRun,
    ci_halfwidth,
    histogram,
    regression_metrics,
    seed_sweep,
    summarize,
    wrapped_residuals_deg,
)
from uavheading.formats import read_sweep, sweep_csv
from uavheading.net import TrainConfig

rad = np.radians


def test_perfect():
    m = regression_metrics([0.1, -0.2], [0.1, -0.2])
    assert m == RegMetrics(0.0, 0.0, 0.0, 0.0, 2)


def test_single_half_degree():
    m = regression_metrics(rad([0.5]), [0.0])
    assert m.mae == pytest.approx(0.5, rel=1e-12)
    assert m.mse == pytest.approx(0.25, rel=1e-12)
    assert m.rmse == pytest.approx(0.5, rel=1e-12)
    assert m.max_ae == pytest.approx(0.5, rel=1e-12)


def test_two_residuals():
    m = regression_metrics(rad([1.1, 2.0]), rad([1.0, 2.3]))
    assert m.mae == pytest.approx(0.2, rel=1e-9)
    assert m.mse == pytest.approx(0.05, rel=1e-9)
    assert m.rmse == pytest.approx(math.sqrt(0.05), rel=1e-9)
    assert m.max_ae == pytest.approx(0.3, rel=1e-9)


def test_wrap_seam():
    assert regression_metrics(rad([179.0]), rad([-179.0])).mae == pytest.approx(2.0, abs=1e-9)
    assert wrapped_residuals_deg([math.pi], [0.0])[0] == 180.0


def test_argument_errors():
    with pytest.raises(ValueError):
        regression_metrics([], [])
    with pytest.raises(ValueError):
        regression_metrics([0.1], [0.1, 0.2])


pairs = st.lists(st.tuples(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi)), min_size=1, max_size=60)


@given(pairs)
def test_identities(pts):
    p, t = np.array(pts).T
    m = regression_metrics(p, t)
    assert m.rmse * m.rmse == m.mse
    assert math.sqrt(m.mse) == m.rmse
    assert m.mae <= m.rmse * (1 + 1e-15)
    assert m.max_ae >= m.mae * (1 - 1e-15)


@given(pairs, st.randoms(use_true_random=False))
def test_permutation_invariant(pts, rnd):
    p, t = np.array(pts).T
    idx = list(range(len(p)))
    rnd.shuffle(idx)
    a, b = regression_metrics(p, t), regression_metrics(p[idx], t[idx])
    assert a.max_ae == b.max_ae
    assert a.mae == pytest.approx(b.mae, rel=1e-12, abs=1e-300)
    assert a.mse == pytest.approx(b.mse, rel=1e-12, abs=1e-300)


def test_ci_spot_check():
    assert round(ci_halfwidth(0.097, 100), 3) == 0.019


def _run(seed, max_ae, mae=0.2):
    return SeedRun(seed, RegMetrics(mae * mae, mae, mae, max_ae, 900), 1e-4, 1e-4)


def test_summary_statistics():
    runs = [_run(s, v) for s, v in enumerate([0.7, 0.9, 1.1, 0.8])]
    s = summarize(runs[::-1])
    assert [r.seed for r in s.runs] == [0, 1, 2, 3]
    assert s.mean_max_ae == pytest.approx(0.875)
    assert s.std_max_ae == pytest.approx(np.std([0.7, 0.9, 1.1, 0.8], ddof=1))
    assert s.ci95_max_ae == 1.96 * s.std_max_ae / math.sqrt(4)
    assert s.frac_max_ae_below_1 == 0.75


def test_forced_identical_seeds():
    rng = np.random.default_rng(0)
    x = rng.uniform(0.1, 0.9, (60, 4))
    y = 0.3 * x[:, 0]
    s = seed_sweep(TrainConfig(epochs=3), 2, (x, y), (x, y), (x, y), seeds=[5, 5])
    assert s.std_max_ae == 0.0 and s.std_mae == 0.0


def test_sweep_error_names_seed():
    x = np.ones((4, 4))
    with pytest.raises(RuntimeError, match="seed 3"):
        seed_sweep(TrainConfig(epochs=1), 2, (x, np.ones(4)), (x[:0], np.ones(0)), (x, np.ones(4)), seeds=[3, 4])


def test_summary_recomputes_from_persisted(tmp_path):
    runs = [_run(s, 0.6 + 0.037 * s, 0.15 + 0.01 * (s % 3)) for s in range(7)]
    s = summarize(runs)
    path = tmp_path / "sweep.csv"
    path.write_text(sweep_csv(s))
    back, stored = read_sweep(path)
    again = summarize(back)
    assert again == s
    assert stored["ci95_max_ae"] == again.ci95_max_ae
    assert stored["ci95_max_ae"] == ci_halfwidth(np.std([r.metrics.max_ae for r in back], ddof=1), len(back))


def test_histogram():
    edges, counts = histogram([0.62] * 10)
    assert len(counts) == 1 and counts[0] == 10
    assert edges[0] <= 0.62 < edges[0] + 0.05
    edges, counts = histogram([0.01, 0.06, 0.07, 0.19])
    assert counts.tolist() == [1, 2, 0, 1]
