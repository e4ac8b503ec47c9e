"""Null calibration study: posterior-draw chi-square vs its reference law.

Simulates well-specified datasets, fits the matching model, evaluates the
statistic at one retained posterior draw per dataset, and reports how the
replicate distribution compares with the chi-square reference. Pass
--classical to tabulate the plugin and grouped statistics alongside.

    python scripts/run_null_calibration.py --reps 2000 --classical
    python scripts/run_null_calibration.py --model poisson-synthetic --n 200 --k 5
"""

import argparse

from bayesgof.harness import ExperimentConfig, null_calibration


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="normal", choices=["normal", "poisson-synthetic"])
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--k", type=int, default=None, help="bin count (default: rule of thumb)")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classical", action="store_true")
    p.add_argument("--mean", type=float, default=4.2, help="synthetic Poisson mean")
    p.add_argument("--prior-exponent", type=float, default=0.5)
    args = p.parse_args()

    cfg = ExperimentConfig(
        model=args.model, n=args.n, bins=args.k, replicates=args.reps,
        seed=args.seed, include_classical=args.classical,
        true_mean=args.mean, prior_exponent=args.prior_exponent,
    )
    res = null_calibration(cfg)

    print(f"model={cfg.model} n={res.n} k={res.k} replicates={res.replicates} "
          f"seed={cfg.seed} runtime={res.runtime_s:.1f}s")
    print(f"{'series':<10} {'mean':>8} {'variance':>9} {'KS D':>8} {'critical':>9} verdict")
    for name, s in res.series.items():
        if s.ks is None:
            ks, crit, verdict = "", "", "no reference"
        else:
            ks = f"{s.ks.statistic:.4f}"
            crit = f"{s.ks.critical:.4f}"
            verdict = "pass" if s.ks.passed else "FAIL"
        print(f"{name:<10} {s.mean:>8.3f} {s.variance:>9.3f} {ks:>8} {crit:>9} {verdict}")


if __name__ == "__main__":
    main()
