#!/usr/bin/env python
"""First simulation study: scalar decision, three-center mixture in R^3.

Runs the study1 preset twice (cover off, then on) for one seed and prints
where the plot-ready outputs landed. Pass --seed to vary the stream.
"""

import argparse
import sys

from drostream.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n0", type=int, default=None,
                        help="shorten the stream for a quick look")
    parser.add_argument("--out-root", default="runs")
    args = parser.parse_args()

    common = ["run", "--preset", "study1", "--seed", str(args.seed)]
    if args.n0 is not None:
        common += ["--n0", str(args.n0)]

    rc = cli_main(common + [
        "--no-cover",
        "--out-dir", f"{args.out_root}/study1-seed{args.seed}-nocover",
    ])
    if rc != 0:
        return rc
    return cli_main(common + [
        "--cover",
        "--out-dir", f"{args.out_root}/study1-seed{args.seed}-cover",
    ])


if __name__ == "__main__":
    sys.exit(main())
