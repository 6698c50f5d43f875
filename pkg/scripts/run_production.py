"""Production planning over four tons ranges: original vs filtered.

    python scripts/run_production.py --out results/production.csv
"""

import sys

from _common import parser, run_group

if __name__ == "__main__":
    args = parser(__doc__.splitlines()[0], "results/production.csv").parse_args()
    sys.exit(run_group(args, {"production"}))
