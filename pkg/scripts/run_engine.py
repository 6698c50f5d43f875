"""Recursive Engine program on data sets 1-4 (stride-thinned weights).

    python scripts/run_engine.py --stride 25 --repeat 5 --out results/engine.csv
"""

import sys

from _common import parser, run_group

if __name__ == "__main__":
    args = parser(__doc__.splitlines()[0], "results/engine.csv").parse_args()
    sys.exit(run_group(args, {"engine"}))
