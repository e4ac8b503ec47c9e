"""Streaming monitor demo: a correct evaluator next to a miscoded one.

Draws a normal dataset, samples its posterior, and feeds the draws through
the streaming exceedance monitor twice: once as-is, once with the scale
parameter doubled to mimic a coding error in the CDF evaluator. The monitor
should stay quiet on the first trace and trip on the second.

    python scripts/run_monitor_demo.py --n 50 --draws 1000 --seed 3
"""

import argparse

from bayesgof.binning import equiprobable
from bayesgof.harness import stream_monitor
from bayesgof.models import NormalModel
from bayesgof.probkit import RngStream, split


def describe(label: str, records) -> None:
    alerts = [r.index for r in records if r.alert]
    final = records[-1]
    state = f"ALERT at draw {alerts[0]}" if alerts else "quiet"
    print(f"{label:<14} {len(records)} draws, final exceedance rate "
          f"{final.cumulative_rate:.3f}, {state}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=3)
    p.add_argument("--scale-factor", type=float, default=2.0,
                   help="how badly the faulty evaluator inflates sigma")
    args = p.parse_args()

    model = NormalModel()
    scheme = equiprobable(args.k)
    root = RngStream(args.seed)
    y = split(root, 0).generator.normal(0.0, 1.0, args.n)
    mu, sigma = model.posterior_draws(y, args.draws, split(root, 1))

    clean = list(stream_monitor(zip(mu, sigma), y, model, scheme))
    faulty = list(stream_monitor(zip(mu, args.scale_factor * sigma), y, model, scheme))

    print(f"n={args.n} k={args.k} draws={args.draws} seed={args.seed} "
          f"fault: sigma x{args.scale_factor:g}")
    describe("well-specified", clean)
    describe("miscoded", faulty)


if __name__ == "__main__":
    main()
