#!/usr/bin/env python3
"""Run every check suite with one seed and summarize the gates."""

import argparse
import sys

from growthlab.cli import main as cli_main
from growthlab.suites import list_suites


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results")
    ap.add_argument("--n-samples", type=int, default=None)
    args = ap.parse_args()
    worst = 0
    for suite in list_suites():
        argv = ["run", "--suite", suite, "--seed", str(args.seed),
                "--out", args.out]
        if args.n_samples:
            argv += ["--param", f"n_samples={args.n_samples}"]
        rc = cli_main(argv)
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
