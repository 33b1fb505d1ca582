"""Text file formats shared by the CLI commands.

Every file starts with a line naming its kind and version:

  weights      JSON object, "format": "uavheading-weights"
  dataset      JSON lines, see data.py
  trace        JSON lines, header "format": "uavheading-trace"
  history      CSV, first line "# uavheading-history v1"
  predictions  CSV, first line "# uavheading-predictions v1"
  sweep        CSV, first line "# uavheading-sweep v1", then a "# summary" block
  histogram    CSV, first line "# uavheading-histogram v1"

Floats are written with repr(), which round-trips doubles exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .evalmetrics import RegMetrics, SeedRun, SweepSummary
from .net import INIT_SCHEME, LAYER_DIMS, PARAM_NAMES, AdamState, MlpParams, TrainConfig, TrainResult

WEIGHTS_FORMAT = "uavheading-weights"
TRACE_FORMAT = "uavheading-trace"
VERSION = 1
CSV_KINDS = ("history", "predictions", "sweep", "histogram")


class FormatError(ValueError):
    pass


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _num(v: float) -> str:
    return repr(float(v))


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


# -- weights -----------------------------------------------------------------

def weights_to_dict(res: TrainResult, extra: dict | None = None) -> dict:
    adam = AdamState()
    d = {
        "format": WEIGHTS_FORMAT,
        "version": VERSION,
        "layer_dims": list(LAYER_DIMS),
        "activation": "relu",
        "init": INIT_SCHEME,
        "seed": res.config.seed,
        "train_config": asdict(res.config),
        "adam": {"beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps},
        "final_train_loss_rad2": res.train_loss[-1],
        "final_val_loss_rad2": res.val_loss[-1],
        "final_train_loss_deg2": res.train_loss[-1] * math.degrees(1.0) ** 2,
        "final_val_loss_deg2": res.val_loss[-1] * math.degrees(1.0) ** 2,
    }
    d.update(extra or {})
    d["params"] = {n: np.asarray(a).tolist() for n, a in zip(PARAM_NAMES, res.params.arrays())}
    return d


def save_weights(res: TrainResult, path, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(weights_to_dict(res, extra), indent=1, allow_nan=False) + "\n")


def load_weights(path) -> tuple[MlpParams, dict]:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not JSON ({e.msg})") from None
    if not isinstance(d, dict) or d.get("format") != WEIGHTS_FORMAT:
        raise FormatError(f"{path}: not a weights file")
    if d.get("version") != VERSION:
        raise FormatError(f"{path}: unsupported weights version {d.get('version')!r}")
    if d.get("layer_dims") != list(LAYER_DIMS):
        raise FormatError(f"{path}: layer dims {d.get('layer_dims')} do not match {list(LAYER_DIMS)}")
    try:
        params = MlpParams(**{n: np.array(d["params"][n], dtype=float) for n in PARAM_NAMES})
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(f"{path}: bad parameter block: {e}") from None
    if not params.is_finite():
        raise FormatError(f"{path}: non-finite weights")
    return params, d


def train_config_from(d: dict) -> TrainConfig:
    return TrainConfig(**d["train_config"])


# -- CSV tables ---------------------------------------------------------------

def _csv(kind: str, columns, rows) -> str:
    lines = [f"# uavheading-{kind} v{VERSION}", ",".join(columns)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else (str(v) if isinstance(v, int) else _num(v))
                              for v in r))
    return "\n".join(lines) + "\n"


def history_csv(res: TrainResult) -> str:
    k = math.degrees(1.0) ** 2
    rows = [(i + 1, t, v, t * k, v * k) for i, (t, v) in enumerate(zip(res.train_loss, res.val_loss))]
    return _csv("history", ("epoch", "train_loss_rad2", "val_loss_rad2", "train_loss_deg2", "val_loss_deg2"),
                rows)


def predictions_csv(frames, truths, preds) -> str:
    from .evalmetrics import wrapped_residuals_deg

    err = wrapped_residuals_deg(preds, truths)
    rows = [(i, int(f), float(t), float(p), float(e))
            for i, (f, t, p, e) in enumerate(zip(frames, truths, preds, err))]
    return _csv("predictions", ("index", "frame", "theta_true_rad", "theta_pred_rad", "error_deg"), rows)


METRIC_COLS = ("mse", "mae", "rmse", "max_ae", "n")


def sweep_csv(summary: SweepSummary) -> str:
    rows = [(r.seed, r.metrics.mse, r.metrics.mae, r.metrics.rmse, r.metrics.max_ae, r.metrics.n,
             r.final_train_loss, r.final_val_loss) for r in summary.runs]
    body = _csv("sweep", ("seed", *METRIC_COLS, "final_train_loss_rad2", "final_val_loss_rad2"), rows)
    summ = [("n_seeds", summary.n_seeds), ("mean_max_ae", summary.mean_max_ae),
            ("std_max_ae", summary.std_max_ae), ("ci95_max_ae", summary.ci95_max_ae),
            ("frac_max_ae_below_1", summary.frac_max_ae_below_1), ("mean_mae", summary.mean_mae),
            ("std_mae", summary.std_mae), ("mean_rmse", summary.mean_rmse), ("std_rmse", summary.std_rmse)]
    tail = ["# summary", "key,value"] + [f"{k},{v if isinstance(v, int) else _num(v)}" for k, v in summ]
    return body + "\n".join(tail) + "\n"


def histogram_csv(edges, counts, width: float) -> str:
    rows = [(float(e), float(e) + width, int(c)) for e, c in zip(edges, counts)]
    return _csv("histogram", ("bin_left_deg", "bin_right_deg", "count"), rows)


def sniff_kind(path) -> str:
    """Identify a uavheading file from its first line."""
    with open(path) as fh:
        first = fh.readline().strip()
    if first.startswith("# uavheading-"):
        kind = first[len("# uavheading-"):].split()[0]
        if kind in CSV_KINDS:
            return kind
    elif first.startswith("{"):
        try:
            head = json.loads(first)
        except json.JSONDecodeError:
            head = None
        if isinstance(head, dict):
            fmt = head.get("format", "")
            if fmt == TRACE_FORMAT:
                return "trace"
            if fmt == "uavheading-dataset":
                return "dataset"
        if first == "{":
            return "weights"
    raise FormatError(f"{path}: unrecognised file kind")


def read_csv_table(path, kind: str) -> tuple[list[str], list[list[str]], dict[str, str]]:
    """Columns, rows and (for sweeps) the summary key/value block."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(f"# uavheading-{kind} "):
        raise FormatError(f"{path}: not a {kind} table")
    cols = lines[1].split(",")
    rows, summary = [], {}
    it = iter(lines[2:])
    for line in it:
        if line == "# summary":
            next(it, None)
            for kv in it:
                k, v = kv.split(",", 1)
                summary[k] = v
            break
        rows.append(line.split(","))
    return cols, rows, summary


def read_sweep(path) -> tuple[list[SeedRun], dict[str, float]]:
    cols, rows, summary = read_csv_table(path, "sweep")
    runs = []
    for r in rows:
        rec = dict(zip(cols, r))
        m = RegMetrics(float(rec["mse"]), float(rec["mae"]), float(rec["rmse"]), float(rec["max_ae"]),
                       int(rec["n"]))
        runs.append(SeedRun(int(rec["seed"]), m, float(rec["final_train_loss_rad2"]),
                            float(rec["final_val_loss_rad2"])))
    return runs, {k: float(v) for k, v in summary.items()}


def read_predictions(path) -> tuple[np.ndarray, np.ndarray]:
    cols, rows, _ = read_csv_table(path, "predictions")
    i_t, i_p = cols.index("theta_true_rad"), cols.index("theta_pred_rad")
    return (np.array([float(r[i_t]) for r in rows]), np.array([float(r[i_p]) for r in rows]))


# -- traces -------------------------------------------------------------------

def _pose(p):
    return [p.x, p.y, p.z, p.yaw]


def trace_lines(episodes, header: dict) -> str:
    out = [_dumps({"format": TRACE_FORMAT, "version": VERSION, **header})]
    for i, ep in enumerate(episodes):
        for r in ep.trace:
            out.append(_dumps({
                "episode": i, "frame": r.frame, "uav": _pose(r.uav), "ugv": _pose(r.ugv),
                "bbox": None if r.bbox is None else list(r.bbox.as_tuple()),
                "theta_hat": r.theta_hat, "error_deg": r.error_deg, "yaw_change": r.yaw_change,
            }))
    return "\n".join(out) + "\n"


def read_trace(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    head = json.loads(lines[0])
    if head.get("format") != TRACE_FORMAT:
        raise FormatError(f"{path}: not a trace file")
    return head, [json.loads(l) for l in lines[1:]]
