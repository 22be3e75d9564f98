"""Write the bundled desk scenario as a scenario file plus kernel and bid CSVs.

    python scripts/make_desk_scenario.py [--params desk.yaml] [--out scenarios] [--first-constrained-year 2080]
"""

import argparse
from pathlib import Path

from warming_market.desk import desk_scenario
from warming_market.serialize import save_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--params", type=Path, default=None)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "scenarios")
    ap.add_argument("--first-constrained-year", type=float, default=None)
    args = ap.parse_args()
    s = desk_scenario(args.params, args.first_constrained_year)
    path = save_scenario(s, args.out, "desk")
    print(f"{path}: {len(s.activities)} activities, {len(s.bids)} bids")


if __name__ == "__main__":
    main()
