"""Property-based checks of the invariants the engine relies on."""

import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from warming_market.auction import (
    Activity,
    AuctionConfig,
    Bid,
    BidSignWarning,
    CapSchedule,
    PriceTable,
    assemble_model,
    clear,
    verify_certificate,
)
from warming_market.bids import BidStack, agriculture_bids, replicate_bids_over_periods, write_bid_book
from warming_market.kernels import (
    ClimateStub,
    GasParams,
    SequestrationSchedule,
    WarmingKernel,
    pulse_difference_kernel,
    vintage_kernel,
    warming_from_totals,
)
from warming_market.oracle import random_instance
from warming_market.serialize import read_price_table, write_price_table

finite = st.floats(-100, 100, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)
quick = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@quick
@given(
    resp=st.lists(finite, min_size=1, max_size=6),
    a=st.dictionaries(st.integers(1, 4), finite, max_size=4),
    b=st.dictionaries(st.integers(1, 4), finite, max_size=4),
)
def test_trajectory_superposition(resp, a, b):
    kernels = {"x": WarmingKernel("x", "u", response=resp)}
    ta = {("x", u): v for u, v in a.items()}
    tb = {("x", u): v for u, v in b.items()}
    both = {k: ta.get(k, 0.0) + tb.get(k, 0.0) for k in set(ta) | set(tb)}
    lhs = warming_from_totals(both, kernels, 8)
    rhs = warming_from_totals(ta, kernels, 8) + warming_from_totals(tb, kernels, 8)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.abs(rhs).max()))


@quick
@given(
    w=st.floats(0.05, 0.95),
    tau=st.floats(0.5, 500.0),
    scale=st.floats(1e-4, 10.0),
    baseline=st.floats(1.0, 1e6),
    f1=st.floats(0.01, 2.0),
    f2=st.floats(0.01, 2.0),
)
def test_pulse_extraction_exact_and_size_independent(w, tau, scale, baseline, f1, f2):
    stub = ClimateStub({"g": GasParams("u", (w, 1 - w), (math.inf, tau), scale, baseline)})
    r = stub.impulse_response("g", 40)
    k1 = pulse_difference_kernel(stub, "g", f1, 40).response
    k2 = pulse_difference_kernel(stub, "g", f2, 40).response
    np.testing.assert_allclose(k1, r, rtol=1e-7, atol=1e-12 * scale)
    np.testing.assert_allclose(k1, k2, rtol=1e-7, atol=1e-12 * scale)


@quick
@given(n=st.lists(st.floats(0, 100), min_size=1, max_size=8), c=st.floats(1e-3, 1e3))
def test_vintage_with_delta_is_scaled_schedule(n, c):
    delta = WarmingKernel("d", "u", response=[1.0] + [0.0] * (len(n) - 1))
    k = vintage_kernel(SequestrationSchedule(tuple(n)), delta, c)
    np.testing.assert_allclose(k.response, [-c * x for x in n])


@quick
@given(
    entries=st.lists(st.tuples(st.floats(0, 1e3), st.floats(0, 1e4)), max_size=6),
    ppy=st.integers(1, 4),
    years=st.integers(1, 3),
)
def test_replication_conserves_mass(entries, ppy, years):
    stack = BidStack("x", "emission", tuple(entries))
    bids = replicate_bids_over_periods(stack, 1, ppy * years, ppy)
    for level, (_, q) in enumerate(stack.entries):
        for y in range(years):
            year_total = sum(
                b.max_qty for b in bids if b.agent == f"x:{level:03d}" and y * ppy < b.period <= (y + 1) * ppy
            )
            assert math.isclose(year_total, q, rel_tol=1e-12, abs_tol=1e-12)


@quick
@given(
    a=st.floats(0, 1), b=st.floats(0, 100), c=st.floats(0, 2000), step=st.floats(0.5, 20), cap=st.floats(0, 1e4)
)
def test_agriculture_supply_monotone(a, b, c, step, cap):
    cum = agriculture_bids(step, 224.0, cap, (a, b, c)).cumulative()
    assert np.all(np.diff(cum) >= -1e-12)
    assert cum[-1] <= cap + 1e-9


@quick
@given(seed=seeds)
def test_bid_book_bytes_deterministic(seed, tmp_path_factory):
    d = tmp_path_factory.mktemp("books")
    m = random_instance(np.random.default_rng(seed))
    write_bid_book(d / "a.csv", m.bids)
    write_bid_book(d / "b.csv", list(reversed(m.bids)))
    assert (d / "a.csv").read_bytes() == (d / "b.csv").read_bytes()


@settings(max_examples=80, deadline=None)
@given(seed=seeds)
def test_certificate_soundness_and_objective(seed):
    m = random_instance(np.random.default_rng(seed))
    r = clear(m)
    if not r.optimal:
        return
    rep = verify_certificate(m, r, 1e-6)
    assert rep.passed, rep.summary()
    total = sum(b.price * r.q[b.key] for b in m.bids)
    assert abs(total - r.objective) <= 1e-6 * (1 + abs(r.objective))
    assert all(q >= -1e-9 for q in r.q.values()) and all(v >= -1e-9 for v in r.v.values())


@pytest.mark.filterwarnings("ignore::warming_market.auction.BidSignWarning")
@settings(max_examples=80, deadline=None)
@given(seed=seeds)
def test_cap_relaxation_monotone(seed):
    m = random_instance(np.random.default_rng(seed))
    cfg = m.config
    sched = cfg.cap_schedule
    results = []
    for Y in range(sched.Y, cfg.T + 1):
        caps = CapSchedule(Y, cfg.T, {t: sched.caps[t] for t in range(Y, cfg.T + 1)})
        m2 = assemble_model(dataclasses.replace(cfg, cap_schedule=caps), m.activities, m.kernels, m.bids)
        results.append(clear(m2))
    for lo, hi in zip(results, results[1:]):
        if lo.optimal:
            assert hi.optimal
            assert hi.objective >= lo.objective - 1e-6 * (1 + abs(lo.objective))


@settings(max_examples=60, deadline=None)
@given(
    seed=seeds,
    resp=st.lists(st.floats(0.1, 3.0), min_size=1, max_size=3),
    T_B=st.integers(1, 3),
)
def test_negated_kernel_prices_mirror(seed, resp, T_B):
    rng = np.random.default_rng(seed)
    T = T_B + 1
    k = WarmingKernel("co2", "Mt", response=resp)
    kernels = {"co2": k, "ag": k.negated("ag")}
    acts = [Activity("co2", "CO2", "emission", "Mt", "co2"), Activity("ag", "Agriculture", "sequestration", "Mt", "ag")]
    bids = []
    for u in range(1, T_B + 1):
        for j in range(2):
            bids.append(Bid(f"e{j}", "co2", u, float(rng.uniform(1, 20)), float(rng.uniform(0.5, 5))))
            bids.append(Bid(f"s{j}", "ag", u, -float(rng.uniform(1, 20)), float(rng.uniform(0.5, 5))))
    cfg = AuctionConfig(1, 1, T_B, T, CapSchedule.net_zero(1, T), {"co2": float(rng.uniform(0, 2))})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BidSignWarning)
        m = assemble_model(cfg, acts, kernels, bids)
    r = clear(m)
    if not r.optimal:
        return
    for u in range(1, T_B + 1):
        if r.v[("co2", u)] > 1e-9 and r.v[("ag", u)] > 1e-9:
            a, b = r.prices[("co2", u)], r.prices[("ag", u)]
            assert abs(a + b) <= 1e-6 * (1 + abs(a))


@quick
@given(
    vals=st.lists(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=2, max_size=2), min_size=1, max_size=5),
    flag=st.booleans(),
)
def test_price_csv_round_trip(vals, flag, tmp_path_factory):
    d = tmp_path_factory.mktemp("prices")
    table = PriceTable(tuple(range(1, len(vals) + 1)), ("a", "b"), tuple(tuple(r) for r in vals), flag)
    write_price_table(d / "p.csv", table)
    assert read_price_table(d / "p.csv") == table
