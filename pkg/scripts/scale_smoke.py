"""Time online admissions into a large, fully loaded cluster."""
import argparse

from morphosys.experiments import scale_smoke


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hosts", type=int, default=4000)
    ap.add_argument("--requests", type=int, default=600)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rep = scale_smoke(args.hosts, args.requests, args.seed)
    print(f"hosts={rep.hosts} requests={rep.requests} mean={rep.mean_ms:.1f}ms max={rep.max_ms:.0f}ms")
    for outcome, n in sorted(rep.outcomes.items()):
        print(f"  {outcome}: {n}")


if __name__ == "__main__":
    main()
