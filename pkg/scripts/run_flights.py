"""Flights: original, filtered, constraint-magic (CMR) and CMR+filtered over the graph presets.

    python scripts/run_flights.py --out results/flights.csv
"""

import sys

from _common import parser, run_group

if __name__ == "__main__":
    args = parser(__doc__.splitlines()[0], "results/flights.csv").parse_args()
    sys.exit(run_group(args, {"flights", "cmr"}))
