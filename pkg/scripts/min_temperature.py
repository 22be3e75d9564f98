"""Accept bids to minimise integrated warming on the desk scenario, ignoring bid value and caps."""

from warming_market.auction import Kind
from warming_market.desk import desk_scenario
from warming_market.scenario import minimize_temperature


def main():
    s = desk_scenario()
    run = minimize_temperature(s)
    cfg = s.config
    print(f"status {run.result.status.value}; integrated warming {run.integrated_warming:.4g} milliC-periods")
    for kind, (lo, hi) in run.accepted_fraction_by_kind().items():
        print(f"{Kind(kind).value:>13}: accepted fraction min {lo:.3f} max {hi:.3f}")
    peak = int(run.trajectory[1:].argmax()) + 1
    print(f"peak warming {run.trajectory[peak]:.4g} milliC in {cfg.label(peak):g}; {run.trajectory[cfg.T]:.4g} in {cfg.label(cfg.T):g}")


if __name__ == "__main__":
    main()
