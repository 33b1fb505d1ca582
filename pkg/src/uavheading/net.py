"""A 4-64-32-1 ReLU regressor with hand-written backprop and Adam."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .seeding import substream

LAYER_DIMS = (4, 64, 32, 1)
PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")
INIT_SCHEME = "he-normal, zero bias"


@dataclass
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name, shape in param_shapes().items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, n) for n in PARAM_NAMES)

    def copy(self) -> MlpParams:
        return MlpParams(*(a.copy() for a in self.arrays()))

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())

    @classmethod
    def zeros(cls) -> MlpParams:
        return cls(*(np.zeros(s) for s in param_shapes().values()))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def from_flat(cls, v: np.ndarray) -> MlpParams:
        out, k = [], 0
        for s in param_shapes().values():
            n = int(np.prod(s))
            out.append(np.array(v[k:k + n], dtype=float).reshape(s))
            k += n
        return cls(*out)


def param_shapes() -> dict[str, tuple[int, ...]]:
    d0, d1, d2, d3 = LAYER_DIMS
    return {"W1": (d1, d0), "b1": (d1,), "W2": (d2, d1), "b2": (d2,), "W3": (d3, d2), "b3": (d3,)}


def init_params(seed: int) -> MlpParams:
    """He-normal weights (variance 2 / fan_in) and zero biases."""
    rng = substream(seed, "init")
    shapes = param_shapes()
    arrs = {}
    for name, shape in shapes.items():
        if name.startswith("W"):
            arrs[name] = rng.normal(0.0, np.sqrt(2.0 / shape[1]), size=shape)
        else:
            arrs[name] = np.zeros(shape)
    return MlpParams(**arrs)


def _as_batch(z) -> np.ndarray:
    x = np.asarray(z, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    return x


def _forward_cache(p: MlpParams, x: np.ndarray):
    h1 = x @ p.W1.T + p.b1
    a1 = np.maximum(h1, 0.0)
    h2 = a1 @ p.W2.T + p.b2
    a2 = np.maximum(h2, 0.0)
    out = a2 @ p.W3[0] + p.b3[0]
    return h1, a1, h2, a2, out


def forward(p: MlpParams, z) -> np.ndarray:
    """Predicted heading (radians) for one feature row or an (n, 4) batch."""
    out = _forward_cache(p, _as_batch(z))[-1]
    if not np.isfinite(out).all():
        raise FloatingPointError("non-finite network output")
    return out


def predict_one(p: MlpParams, z) -> float:
    return float(forward(p, z)[0])


def loss_mse(p: MlpParams, x, y) -> float:
    x = _as_batch(x)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) == 0:
        raise ValueError("loss of an empty batch")
    r = forward(p, x) - y
    return float(np.mean(r * r))


def backward(p: MlpParams, x, y) -> MlpParams:
    """Exact gradient of loss_mse; the ReLU derivative at 0 is taken as 0."""
    x = _as_batch(x)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = len(y)
    if n == 0:
        raise ValueError("gradient of an empty batch")
    h1, a1, h2, a2, out = _forward_cache(p, x)
    if not np.isfinite(out).all():
        raise FloatingPointError("non-finite network output")
    dout = (2.0 / n) * (out - y)
    dW3 = (dout @ a2)[None, :]
    db3 = np.array([dout.sum()])
    dh2 = np.outer(dout, p.W3[0]) * (h2 > 0)
    dW2 = dh2.T @ a1
    db2 = dh2.sum(axis=0)
    dh1 = (dh2 @ p.W2) * (h1 > 0)
    dW1 = dh1.T @ x
    db1 = dh1.sum(axis=0)
    return MlpParams(dW1, db1, dW2, db2, dW3, db3)


@dataclass
class AdamState:
    m: MlpParams = field(default_factory=MlpParams.zeros)
    v: MlpParams = field(default_factory=MlpParams.zeros)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(p: MlpParams, s: AdamState, grad: MlpParams, lr: float) -> tuple[MlpParams, AdamState]:
    t = s.t + 1
    c1 = 1.0 - s.beta1**t
    c2 = 1.0 - s.beta2**t
    new_p, new_m, new_v = [], [], []
    for w, m, v, g in zip(p.arrays(), s.m.arrays(), s.v.arrays(), grad.arrays()):
        m = s.beta1 * m + (1.0 - s.beta1) * g
        v = s.beta2 * v + (1.0 - s.beta2) * (g * g)
        new_p.append(w - lr * (m / c1) / (np.sqrt(v / c2) + s.eps))
        new_m.append(m)
        new_v.append(v)
    return MlpParams(*new_p), replace(s, m=MlpParams(*new_m), v=MlpParams(*new_v), t=t)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.001
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or not self.learning_rate > 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class TrainResult:
    params: MlpParams
    train_loss: list[float]
    val_loss: list[float]
    config: TrainConfig


def train(x_train, y_train, x_val, y_val, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Minibatch Adam on MSE; one seeded reshuffle per epoch, partial last batch kept.

    Losses are recorded over the full train and validation sets at the end
    of every epoch.
    """
    x_train, x_val = _as_batch(x_train), _as_batch(x_val)
    y_train = np.asarray(y_train, dtype=float).reshape(-1)
    y_val = np.asarray(y_val, dtype=float).reshape(-1)
    if len(y_train) == 0 or len(y_val) == 0:
        raise ValueError("train and validation splits must be non-empty")
    if len(x_train) != len(y_train) or len(x_val) != len(y_val):
        raise ValueError("features and targets differ in length")
    p = init_params(cfg.seed)
    s = AdamState()
    shuffle = substream(cfg.seed, "shuffle")
    n = len(y_train)
    hist_train, hist_val = [], []
    for _ in range(cfg.epochs):
        perm = shuffle.permutation(n)
        for k in range(0, n, cfg.batch_size):
            idx = perm[k:k + cfg.batch_size]
            g = backward(p, x_train[idx], y_train[idx])
            p, s = adam_step(p, s, g, cfg.learning_rate)
        hist_train.append(loss_mse(p, x_train, y_train))
        hist_val.append(loss_mse(p, x_val, y_val))
    return TrainResult(p, hist_train, hist_val, cfg)


def _loss_ext(arrays, x, y):
    W1, b1, W2, b2, W3, b3 = arrays
    a1 = np.maximum(x @ W1.T + b1, 0)
    a2 = np.maximum(a1 @ W2.T + b2, 0)
    r = a2 @ W3[0] + b3[0] - y
    return np.mean(r * r)


def grad_check(p: MlpParams, x, y, epsilon: float = 1e-5, grad: MlpParams | None = None,
               refine_above: float | None = 1e-6) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Gap per parameter is |a - n| / max(1e-12, |a| + |n|). Pass `grad` to
    check a gradient other than the one backward() produces.

    Entries whose gap exceeds `refine_above` get their central difference
    recomputed with the loss in extended precision: near-zero gradients
    (cancellation across the batch) otherwise sit below the double-precision
    roundoff of the loss itself. Set refine_above=None to disable.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    x = _as_batch(x)
    y = np.asarray(y, dtype=float).reshape(-1)
    analytic = (backward(p, x, y) if grad is None else grad).flat()
    q = p.copy()
    numeric = []
    for arr in q.arrays():
        view = arr.reshape(-1)
        for i in range(view.size):
            old = view[i]
            view[i] = old + epsilon
            lp = loss_mse(q, x, y)
            view[i] = old - epsilon
            lm = loss_mse(q, x, y)
            view[i] = old
            numeric.append((lp - lm) / (2.0 * epsilon))
    numeric = np.array(numeric)

    def gap(a, n):
        return np.abs(a - n) / np.maximum(1e-12, np.abs(a) + np.abs(n))

    rel = gap(analytic, numeric)
    if refine_above is not None and (rel > refine_above).any():
        ext = [a.astype(np.longdouble) for a in p.arrays()]
        xe, ye = x.astype(np.longdouble), y.astype(np.longdouble)
        eps = np.longdouble(epsilon)
        offsets = np.cumsum([0] + [a.size for a in ext])
        for k in np.flatnonzero(rel > refine_above):
            j = int(np.searchsorted(offsets, k, side="right") - 1)
            view = ext[j].reshape(-1)
            i = k - offsets[j]
            old = view[i]
            view[i] = old + eps
            lp = _loss_ext(ext, xe, ye)
            view[i] = old - eps
            lm = _loss_ext(ext, xe, ye)
            view[i] = old
            numeric[k] = float((lp - lm) / (2 * eps))
        rel = gap(analytic, numeric)
    return float(np.max(rel))
