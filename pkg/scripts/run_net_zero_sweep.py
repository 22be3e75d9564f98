"""First-constrained-year sweep on the desk scenario.

Writes sweep.csv (objective and both revenue measures per Y),
sweep_trajectories.csv, and a price table for the earliest feasible Y.

    python scripts/run_net_zero_sweep.py --y-from 2040 --y-to 2100 --y-step 5 --out results/net_zero
"""

import argparse
import time
from pathlib import Path

from warming_market.desk import desk_scenario
from warming_market.scenario import feasibility_frontier, objective_monotone, run_auction, sweep_first_constrained_year
from warming_market.serialize import emit_results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--y-from", type=float, default=2040)
    ap.add_argument("--y-to", type=float, default=2100)
    ap.add_argument("--y-step", type=float, default=5)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/net_zero"))
    args = ap.parse_args()

    s = desk_scenario()
    n = int(round((args.y_to - args.y_from) / args.y_step)) + 1
    years = [args.y_from + i * args.y_step for i in range(n)]
    t0 = time.perf_counter()
    records = sweep_first_constrained_year(s, years, workers=args.workers)
    print(f"{len(records)} auctions in {time.perf_counter() - t0:.1f} s")
    print(f"{'Y':>6} {'status':>11} {'objective':>14} {'revenue_net':>14} {'revenue_eq6':>14}")
    for r in records:
        cells = ["" if x is None else f"{x:.4g}" for x in (r.objective, r.revenue_net, r.revenue_eq6)]
        print(f"{r.Y:>6g} {r.status.value:>11} {cells[0]:>14} {cells[1]:>14} {cells[2]:>14}")
    frontier = feasibility_frontier(records, args.y_step)
    print(f"frontier: {frontier}; objective nondecreasing in Y: {objective_monotone(records)}")
    emit_results(args.out, sweep=records)
    if frontier is not None:
        run = run_auction(s.with_first_constrained_year(frontier))
        emit_results(args.out / f"clear_{frontier:g}", run=run, display_sign=True)
        print(f"prices at Y={frontier:g} written to {args.out / f'clear_{frontier:g}'} (display sign)")


if __name__ == "__main__":
    main()
