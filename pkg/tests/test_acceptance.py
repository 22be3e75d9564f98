"""Acceptance gate: eleven criteria, one PASS/FAIL line each in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``).
"""

import contextlib
import inspect
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, SCENARIOS, tiny0, tiny1
from warming_market.auction import Kind, Status, clear, price_table, revenue_eq6, revenue_net, verify_certificate
from warming_market.bids import agriculture_bids, forestry_bids, ingest_mac_stack
from warming_market.desk import desk_scenario
from warming_market.kernels import WarmingKernel, pulse_difference_kernel
from warming_market.oracle import (
    grid_resolution_bound,
    grid_search_oracle,
    knapsack_oracle,
    random_instance,
    random_knapsack_instance,
)
from warming_market.scenario import (
    Scenario,
    cap_respected,
    feasibility_frontier,
    minimize_temperature,
    objective_monotone,
    run_auction,
    sweep_first_constrained_year,
)
from warming_market.serialize import emit_results, load_scenario, read_price_table, read_sweep_csv

N_SEEDS = 100
SWEEP_YEARS = [2040.0, 2055.0, 2070.0, 2085.0, 2100.0]


pytestmark = pytest.mark.filterwarnings("ignore::warming_market.auction.BidSignWarning")


@contextlib.contextmanager
def criterion(n, title, limit=None, prior_seconds=0.0):
    """Record a PASS/FAIL line for criterion ``n``; the body may append notes to the yielded list."""
    start = time.perf_counter()
    notes = []
    try:
        yield notes
        elapsed = time.perf_counter() - start + prior_seconds
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.1f} s, limit {limit} s"
    except BaseException as exc:
        reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        ACCEPTANCE[n] = f"FAIL  {n:>2}. {title} ({time.perf_counter() - start + prior_seconds:.2f} s): {reason}"
        raise
    suffix = f"; {'; '.join(notes)}" if notes else ""
    ACCEPTANCE[n] = f"PASS  {n:>2}. {title} ({elapsed:.2f} s{suffix})"


def seeded(n=N_SEEDS, make=random_instance):
    return [make(np.random.default_rng(seed)) for seed in range(n)]


@pytest.fixture(scope="module")
def desk():
    return desk_scenario()


@pytest.fixture(scope="module")
def sweep(desk):
    start = time.perf_counter()
    records = sweep_first_constrained_year(desk, SWEEP_YEARS)
    return records, time.perf_counter() - start


def test_01_certificate_suite():
    with criterion(1, "certificate suite on TINY-0, TINY-1 and 100 seeded instances", limit=10):
        n_optimal = 0
        for m in [tiny0(), tiny1(), *seeded()]:
            r = clear(m)
            if r.optimal:
                n_optimal += 1
                rep = verify_certificate(m, r, 1e-6)
                assert rep.passed, rep.summary()
        assert n_optimal >= 50, f"only {n_optimal} optimal instances"


def test_02_oracle_equivalence():
    with criterion(2, "grid and knapsack oracles agree with the LP", limit=60):
        for seed, m in enumerate(seeded()):
            r, g = clear(m), grid_search_oracle(m, 11)
            assert r.optimal == g.feasible, f"seed {seed}: feasibility disagrees"
            if r.optimal:
                assert g.objective <= r.objective + 1e-9, f"seed {seed}: grid beats LP"
                gap = r.objective - g.objective
                assert gap <= grid_resolution_bound(m, 11) + 1e-9, f"seed {seed}: gap {gap}"
        for seed, m in enumerate(seeded(make=random_knapsack_instance)):
            r, k = clear(m), knapsack_oracle(m)
            assert r.optimal == k.feasible, f"knapsack seed {seed}: feasibility disagrees"
            if r.optimal:
                assert abs(r.objective - k.objective) <= 1e-9 * (1 + abs(k.objective)), f"knapsack seed {seed}"
        m = tiny1(periods=1)
        r, k = clear(m), knapsack_oracle(m)
        assert abs(k.objective - 30.0) <= 1e-9 and abs(r.objective - 30.0) <= 1e-9
        assert abs(k.omega - 10.0) <= 1e-9 and abs(r.cap_duals[1] - 10.0) <= 1e-9


def test_03_tiny1_exact():
    with criterion(3, "TINY-1 exact values"):
        run = run_auction(load_scenario(SCENARIOS / "tiny1.scenario"))
        r = run.result
        assert abs(r.objective - 90.0) <= 1e-6
        for u in (1, 2, 3):
            assert abs(r.prices[("E", u)] - 10.0) <= 1e-6
            assert abs(r.prices[("S", u)] + 10.0) <= 1e-6
        assert abs(revenue_net(r)) <= 1e-6
        assert abs(revenue_eq6(r, run.model.bids) - 300.0) <= 1e-6
        assert np.abs(run.trajectory).max() <= 1e-6


def test_04_monotone_in_Y(sweep):
    records, elapsed = sweep
    with criterion(4, f"desk 5-point Y sweep monotone {[int(y) for y in SWEEP_YEARS]}", 60, elapsed):
        feasibility_frontier(records)
        assert objective_monotone(records, 1e-6)
        assert all(r.certified for r in records if r.status is Status.OPTIMAL)


def test_05_infeasible_then_feasible(sweep):
    records, _ = sweep
    with criterion(5, "desk sweep infeasible early, feasible late, with a crossover") as notes:
        assert records[0].status is Status.INFEASIBLE
        assert records[-1].status is Status.OPTIMAL
        frontier = feasibility_frontier(records)
        assert frontier is not None and SWEEP_YEARS[0] < frontier <= SWEEP_YEARS[-1]
        notes.append(f"frontier Y={frontier:g}")


def test_06_minimize_temperature(desk):
    with criterion(6, "minimize temperature accepts all sequestration and no emissions"):
        m = desk.model()
        for i, a in enumerate(m.activities):
            w = m.W[i, 1:, 1:]
            assert (w >= 0).all() if a.kind is Kind.EMISSION else (w <= 0).all(), f"{a.id} kernel changes sign"
        fractions = minimize_temperature(desk).accepted_fraction_by_kind()
        assert fractions[Kind.EMISSION][1] <= 1e-9
        assert fractions[Kind.SEQUESTRATION][0] >= 1 - 1e-9


def test_07_cap_respect(desk, sweep):
    records, _ = sweep
    with criterion(7, "feasible runs stay at or below their caps"):
        runs = [run_auction(desk), run_auction(load_scenario(SCENARIOS / "tiny1.scenario"))]
        for m in seeded():
            r = clear(m)
            if r.optimal:
                runs.append(run_auction(Scenario(m.config, m.activities, m.kernels, m.bids)))
        for run in runs:
            assert cap_respected(run, 1e-6)
        for rec in records:
            if rec.status is Status.OPTIMAL:
                Y = desk.config.period_of(rec.Y)
                assert max(rec.trajectory[Y:]) <= 0.0 + 1e-6, f"Y={rec.Y}"


def test_08_negated_kernel_antisymmetry(desk):
    with criterion(8, "agriculture and CO2 prices mirror under display sign"):
        m = desk.model()
        co2 = desk.kernels[next(a.kernel_id for a in desk.activities if a.id == "co2")]
        ag = desk.kernels[next(a.kernel_id for a in desk.activities if a.id == "agriculture")]
        assert ag.response == co2.negated().response
        run = run_auction(desk)
        r = run.result
        periods = [u for u in range(1, m.config.T_B + 1) if r.v[("co2", u)] > 1e-9 and r.v[("agriculture", u)] > 1e-9]
        assert periods, "no period with positive volume on both sides"
        table = price_table(r, periods, ["agriculture", "co2"], display_sign=True)
        for u in periods:
            ag_p, co2_p = table.get(u, "agriculture"), table.get(u, "co2")
            assert ag_p > 0 > co2_p
            assert abs(ag_p + co2_p) <= 1e-6 * (1 + abs(co2_p)), f"period {u}"


def test_09_structural_constants(tmp_path):
    with criterion(9, "structural constants: 57 x $4 to $224, 25 Mha/yr in 25,000 ha steps, 10 Mt, 281"):
        ag = agriculture_bids()
        prices = [p for p, _ in ag.entries]
        assert len(prices) == 57 and prices == [4.0 * k for k in range(57)] and prices[-1] == 224.0
        stacks = forestry_bids()
        assert len(stacks) == 3
        assert sum(s.total for s in stacks) == pytest.approx(25e6, rel=1e-12)
        for s in stacks:
            assert all(q == 25_000.0 for _, q in s.entries[:-1])
        assert inspect.signature(ingest_mac_stack).parameters["increment"].default == 10.0
        assert inspect.signature(pulse_difference_kernel).parameters["horizon"].default == 281
        from warming_market.kernels import ClimateStub, GasParams

        stub = ClimateStub({"g": GasParams("Mt", (1.0,), (10.0,), 1.0, 1.0)})
        assert len(pulse_difference_kernel(stub, "g").response) == 281
        path = tmp_path / "mac.csv"
        path.write_text("price,quantity,currency_year\n100,35,2005\n")
        mac = ingest_mac_stack(path, 1.1, 1.0)
        assert [q for _, q in mac.entries] == [10.0, 10.0, 10.0, 5.0]
        assert mac.entries[0][0] == pytest.approx(110.0)


def test_10_desk_scale():
    with criterion(10, "desk default scenario builds and clears end to end", limit=60) as notes:
        s = desk_scenario()
        cfg = s.config
        assert len(s.activities) == 13 and cfg.periods_per_year == 1
        assert cfg.label(1) == 2020 and cfg.label(cfg.T_B) == 2100 and cfg.label(cfg.T) == 2170
        run = run_auction(s)
        assert run.result.optimal and run.certificate.passed, run.certificate.summary()
        notes.append(f"{len(s.bids)} bids, {run.model.n_vars} variables, LP {run.result.solve_time:.2f} s")


def test_11_csv_round_trip(tmp_path, sweep):
    records, _ = sweep
    with criterion(11, "prices.csv and sweep.csv round trip exactly"):
        run = run_auction(load_scenario(SCENARIOS / "tiny1.scenario"))
        for flag in (False, True):
            emit_results(tmp_path / str(flag), run=run, sweep=records, display_sign=flag)
            expected = price_table(run.result, [1, 2, 3], ["E", "S"], flag)
            assert read_price_table(tmp_path / str(flag) / "prices.csv") == expected
            back = read_sweep_csv(tmp_path / str(flag) / "sweep.csv")
            fields = lambda r: (r.Y, r.status, r.objective, r.revenue_net, r.revenue_eq6)  # noqa: E731
            assert [fields(r) for r in back] == [fields(r) for r in records]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
