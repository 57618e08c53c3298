"""CE of FF-NR under uptime-percentage SLA policies.

Sweeps the uptime level delta with every task under the policy, then the
share of tasks under the policy at delta = 0.995.
"""
import argparse
import csv
from pathlib import Path

from morphosys.experiments import Interval, sweep, uptime_variants


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--strategy", default="FF-NR")
    ap.add_argument("--out", default="results/uptime.csv")
    args = ap.parse_args()
    settings = [(1.0, 0.999), (1.0, 0.997), (1.0, 0.995), (0.0, 0.995), (0.25, 0.995),
                (0.5, 0.995), (0.75, 0.995)]
    res = sweep(uptime_variants(settings), args.strategy, range(args.seeds))
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "up_fraction", "delta", "mean_ce", "ci_low", "ci_high"])
        for (up, delta), ce in sorted(res.items()):
            iv = Interval.of(ce)
            w.writerow([args.strategy, up, delta, repr(iv.mean), repr(iv.low), repr(iv.high)])
            print(f"UP share {up:<4g} delta {delta:<6g} {iv}")


if __name__ == "__main__":
    main()
