import time

import numpy as np
import pytest

from uavheading.data import WorldConfig, build_dataset
from uavheading.net import TrainConfig, _forward_cache, init_params, train

ACCEPTANCE_LINES: list[str] = []
TIMINGS: dict[str, float] = {}


def report(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def draw_grad_problem(rng: np.random.Generator, margin: float = 1e-3):
    """Random (params, batch) with every ReLU pre-activation at least `margin`
    away from its kink, so central differences never straddle it."""
    while True:
        p = init_params(int(rng.integers(2**32)))
        for name in ("b1", "b2", "b3"):
            setattr(p, name, rng.normal(0.0, 0.5, getattr(p, name).shape))
        n = int(rng.integers(1, 33))
        x = np.column_stack([
            rng.uniform(0.05, 0.95, n), rng.uniform(0.05, 0.95, n),
            rng.uniform(1e-3, 0.5, n), rng.uniform(0.2, 3.0, n),
        ])
        y = rng.uniform(-1.0, 1.0, n)
        h1, _, h2, _, _ = _forward_cache(p, x)
        if np.abs(h1).min() > margin and np.abs(h2).min() > margin:
            return p, x, y


@pytest.fixture(scope="session")
def default_dataset():
    """9,000 noiseless samples from the default world."""
    return build_dataset(WorldConfig(), 9000, seed=0)


@pytest.fixture(scope="session")
def default_model(default_dataset):
    ds = default_dataset
    t0 = time.perf_counter()
    res = train(*ds.arrays("train"), *ds.arrays("val"), TrainConfig(seed=0))
    TIMINGS["default_model"] = time.perf_counter() - t0
    return res


@pytest.fixture(scope="session")
def small_dataset():
    return build_dataset(WorldConfig(), 400, seed=3)
