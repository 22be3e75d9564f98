"""Full auction runs and the first-constrained-year experiment protocol."""

from __future__ import annotations

import dataclasses
import time
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .auction import (
    Activity,
    AuctionConfig,
    Bid,
    CapSchedule,
    CertificateReport,
    ClearingResult,
    Kind,
    ModelInstance,
    Status,
    Tolerances,
    allocation_report,
    assemble_model,
    clear,
    revenue_eq6,
    revenue_net,
    solve_min_warming,
    verify_certificate,
)
from .kernels import WarmingKernel, temperature_trajectory


class FrontierError(RuntimeError):
    """A sweep's feasibility pattern is not monotone in Y, or the sweep is not contiguous."""


@dataclass(frozen=True)
class Scenario:
    config: AuctionConfig
    activities: tuple[Activity, ...]
    kernels: Mapping[str, WarmingKernel]
    bids: tuple[Bid, ...]
    label: str = ""

    def model(self) -> ModelInstance:
        return assemble_model(self.config, self.activities, self.kernels, self.bids)

    def with_first_constrained_year(self, year: float, level: float = 0.0) -> Scenario:
        """Same scenario with caps infinite before ``year`` and ``level`` from then through T."""
        Y = self.config.period_of(year)
        caps = CapSchedule.net_zero(Y, self.config.T, level)
        return dataclasses.replace(self, config=dataclasses.replace(self.config, cap_schedule=caps))

    @property
    def activity_kernels(self) -> dict[str, WarmingKernel]:
        return {a.id: self.kernels[a.kernel_id] for a in self.activities}


@dataclass
class AuctionRun:
    model: ModelInstance
    result: ClearingResult
    certificate: CertificateReport | None
    trajectory: np.ndarray | None
    allocation: dict[tuple[str, int], float] = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        """True when an optimal clear failed its certificate."""
        return self.certificate is not None and not self.certificate.passed


def run_auction(s: Scenario, tolerances: Tolerances = Tolerances()) -> AuctionRun:
    """Clear, certify, and attach the temperature path and acceptance fractions."""
    m = s.model()
    r = clear(m, tolerances)
    if not r.optimal:
        return AuctionRun(m, r, None, None)
    cert = verify_certificate(m, r, tolerances.certificate)
    traj = temperature_trajectory(r, s.activity_kernels, s.config.initial_burdens, s.config.T)
    return AuctionRun(m, r, cert, traj, allocation_report(r, m.bids))


@dataclass
class SweepRecord:
    """One auction of a first-constrained-year sweep; money fields are ``None`` when infeasible."""

    Y: float
    status: Status
    objective: float | None = None
    revenue_net: float | None = None
    revenue_eq6: float | None = None
    trajectory: tuple[float, ...] | None = None
    solve_time: float = 0.0
    certified: bool | None = None

    def same_outcome(self, other: SweepRecord) -> bool:
        """Equality ignoring wall-clock time."""
        a = dataclasses.replace(self, solve_time=0.0)
        b = dataclasses.replace(other, solve_time=0.0)
        return a == b


def _sweep_one(args) -> SweepRecord:
    s, year, tolerances = args
    start = time.perf_counter()
    run = run_auction(s.with_first_constrained_year(year), tolerances)
    elapsed = time.perf_counter() - start
    r = run.result
    if not r.optimal:
        return SweepRecord(year, r.status, solve_time=elapsed)
    return SweepRecord(
        year,
        r.status,
        r.objective,
        revenue_net(r),
        revenue_eq6(r, run.model.bids),
        tuple(float(x) for x in run.trajectory),
        elapsed,
        run.certificate.passed,
    )


def sweep_first_constrained_year(
    s: Scenario,
    Y_range: Iterable[float],
    tolerances: Tolerances = Tolerances(),
    workers: int = 1,
) -> list[SweepRecord]:
    """Clear once per first-constrained year, caps 0 from Y through T; records sorted by Y.

    With ``workers > 1`` the auctions run in separate processes; results do
    not depend on evaluation order.
    """
    years = list(Y_range)
    last = s.config.label(s.config.T)
    for y in years:
        if not s.config.start_period <= y <= last:
            raise ValueError(f"first constrained year {y} outside [{s.config.start_period}, {last}]")
    jobs = [(s, y, tolerances) for y in years]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_sweep_one, jobs))
    else:
        records = [_sweep_one(j) for j in jobs]
    return sorted(records, key=lambda rec: rec.Y)


def feasibility_frontier(records: Sequence[SweepRecord], step: float | None = None) -> float | None:
    """Earliest feasible Y of a contiguous sweep, or ``None`` if none is feasible.

    Raises :class:`FrontierError` if feasibility is not monotone in Y (which
    would mean the engine is wrong, since raising Y only removes caps) or if
    the Y values are not evenly spaced.
    """
    if not records:
        return None
    ys = [r.Y for r in records]
    if ys != sorted(ys) or len(set(ys)) != len(ys):
        raise FrontierError("records must have distinct Y values in increasing order")
    gaps = {round(b - a, 9) for a, b in zip(ys, ys[1:])}
    if step is not None:
        gaps.add(round(step, 9))
    if len(gaps) > 1:
        raise FrontierError(f"sweep is not contiguous: Y spacing {sorted(gaps)}")
    feasible = [r.status is Status.OPTIMAL for r in records]
    first = next((i for i, f in enumerate(feasible) if f), None)
    if first is None:
        return None
    if not all(feasible[first:]):
        bad = next(records[i].Y for i in range(first, len(records)) if not feasible[i])
        raise FrontierError(f"feasible at Y={records[first].Y} but infeasible at later Y={bad}")
    return records[first].Y


def objective_monotone(records: Sequence[SweepRecord], tol: float = 1e-6) -> bool:
    """True iff feasible objectives never decrease as Y increases."""
    vals = [r.objective for r in records if r.status is Status.OPTIMAL]
    return all(b >= a - tol * (1 + abs(a)) for a, b in zip(vals, vals[1:]))


@dataclass
class MinTemperatureRun:
    model: ModelInstance
    result: ClearingResult
    trajectory: np.ndarray
    allocation: dict[tuple[str, int], float]
    integrated_warming: float

    def accepted_fraction_by_kind(self) -> dict[Kind, tuple[float, float]]:
        """(min, max) acceptance fraction over offered (activity, period) slots per kind."""
        kinds = {a.id: a.kind for a in self.model.activities}
        offered = {(b.activity, b.period) for b in self.model.bids if b.max_qty > 0}
        out: dict[Kind, list[float]] = {}
        for key in offered:
            out.setdefault(kinds[key[0]], []).append(self.allocation[key])
        return {k: (min(v), max(v)) for k, v in out.items()}


def minimize_temperature(s: Scenario, tolerances: Tolerances = Tolerances()) -> MinTemperatureRun:
    """Accept bids to minimise warming summed over periods 1..T, ignoring caps and bid value."""
    m = s.model()
    r = solve_min_warming(m, tolerances)
    traj = temperature_trajectory(r, s.activity_kernels, s.config.initial_burdens, s.config.T)
    return MinTemperatureRun(m, r, traj, allocation_report(r, m.bids), float(traj[1:].sum()))


def cap_respected(run: AuctionRun, tol: float = 1e-6) -> bool:
    """Every constrained period's warming is at or below its cap (plus ``tol``)."""
    m = run.model
    return all(run.trajectory[t] <= m.cap(t) + tol for t in m.cap_periods)


def binding_periods(run: AuctionRun, tol: float = 1e-6) -> list[int]:
    return [t for t, w in run.result.cap_duals.items() if w > tol]


__all__ = [
    "AuctionRun",
    "FrontierError",
    "MinTemperatureRun",
    "Scenario",
    "SweepRecord",
    "binding_periods",
    "cap_respected",
    "feasibility_frontier",
    "minimize_temperature",
    "objective_monotone",
    "run_auction",
    "sweep_first_constrained_year",
]
