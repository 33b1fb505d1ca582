"""Generate the 9,000-sample synthetic set, train with the default
configuration and print the validation/test metrics table.

    python3 scripts/reproduce_table.py --out runs/table
"""

import argparse
import time
from pathlib import Path

import numpy as np

from uavheading import formats, plots
from uavheading.cli import format_table
from uavheading.data import WorldConfig, build_dataset, save_dataset
from uavheading.evalmetrics import evaluate, wrapped_residuals_deg
from uavheading.net import TrainConfig, forward, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=9000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--out", default="runs/table")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ds = build_dataset(WorldConfig(), args.count, args.seed)
    save_dataset(ds, out / "dataset.jsonl")
    t0 = time.perf_counter()
    res = train(*ds.arrays("train"), *ds.arrays("val"), TrainConfig(epochs=args.epochs, seed=args.seed))
    print(f"trained {args.epochs} epochs in {time.perf_counter() - t0:.1f} s; "
          f"final train loss {res.train_loss[-1]:.3e} rad^2")
    formats.save_weights(res, out / "weights.json")
    (out / "history.csv").write_text(formats.history_csv(res))

    rows = [(label, evaluate(res.params, *ds.arrays(sp))) for label, sp in (("Validation", "val"), ("Testing", "test"))]
    print(format_table(rows))

    x, y = ds.arrays("test")
    pred = forward(res.params, x)
    frames = [s.frame_index for s in ds.subset("test")]
    (out / "predictions.csv").write_text(formats.predictions_csv(frames, y, pred))
    plots.save_svg(plots.error_vs_index(wrapped_residuals_deg(pred, y)), out / "error_vs_index.svg")
    plots.save_svg(plots.pred_vs_true(np.degrees(y), np.degrees(pred)), out / "pred_vs_true.svg")
    plots.save_svg(plots.loss_history(range(1, len(res.train_loss) + 1), res.train_loss, res.val_loss),
                   out / "loss.svg")
    print(f"outputs in {out}/")


if __name__ == "__main__":
    main()
