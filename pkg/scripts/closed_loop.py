"""Closed-loop yaw alignment campaigns: analytic oracle (noiseless) and a
trained regressor under detector noise.

    python3 scripts/closed_loop.py --weights runs/table/weights.json
"""

import argparse
from pathlib import Path

from uavheading import formats, plots
from uavheading.detect import DetectorNoise
from uavheading.simloop import CampaignConfig, ControlConfig, MlpPredictor, OraclePredictor, run_campaign


def show(name, res):
    fails = [e.reason for e in res.episodes if not e.success]
    print(f"{name:<28} success {res.success_rate:6.1%}  mean {res.mean_abs_alignment_error:.4f} deg  "
          f"max {res.max_abs_alignment_error:.4f} deg  failures {sorted(set(fails)) or '-'}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--weights", help="weights file from reproduce_table.py or `uavheading train`")
    ap.add_argument("--episodes", type=int, default=100)
    ap.add_argument("--gain", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/closed_loop")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctl = ControlConfig(gain=args.gain)

    res = run_campaign(CampaignConfig(), ctl, OraclePredictor(), args.episodes, args.seed)
    show("oracle, noiseless", res)
    plots.save_svg(plots.alignment_trace({i: [r.error_deg for r in e.trace] for i, e in enumerate(res.episodes[:10])}),
                   out / "oracle_trace.svg")

    if args.weights:
        params, _ = formats.load_weights(args.weights)
        for sigma, miss in ((0.0, 0.0), (2.0, 0.05), (4.0, 0.2)):
            cc = CampaignConfig(noise=DetectorNoise(sigma, miss, 0.0, (0.5, 1.0)))
            res = run_campaign(cc, ctl, MlpPredictor(params), args.episodes, args.seed)
            show(f"mlp, sigma {sigma} px miss {miss}", res)
        plots.save_svg(plots.alignment_trace({i: [r.error_deg for r in e.trace]
                                              for i, e in enumerate(res.episodes[:10])}),
                       out / "mlp_trace.svg")


if __name__ == "__main__":
    main()
