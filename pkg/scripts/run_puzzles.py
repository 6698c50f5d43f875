"""Cryptarithmetic puzzles: original vs filtered, with pruning statistics.

    python scripts/run_puzzles.py --repeat 3 --out results/puzzles.csv
"""

import sys

from _common import parser, run_group

if __name__ == "__main__":
    args = parser(__doc__.splitlines()[0], "results/puzzles.csv").parse_args()
    sys.exit(run_group(args, {"puzzles"}))
