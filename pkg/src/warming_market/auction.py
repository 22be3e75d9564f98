"""Market clearing: assemble the warming-capped auction LP, solve it, certify it.

The program maximises accepted bid value::

    max  sum B[a,p,u] q[a,p,u]
    s.t. 0 <= q[a,p,u] <= Q[a,p,u]                                  (bid bounds)
         sum_a q[a,p,u] - v[p,u] = 0              dual pi[p,u]       (totals)
         base[t] + sum_{p, u<=t} W[p,u,t] v[p,u] <= Cap[t]   dual omega[t] >= 0,  t = Y..T

with ``base[t] = sum_p W[p,0,t] I_p``. ``v`` is declared free; it equals a sum
of nonnegative ``q`` so it is nonnegative anyway, and leaving it free makes the
dual row of ``v`` tight: ``pi[p,u] = sum_t W[p,u,t] omega[t]`` exactly.

Sign convention: ``omega >= 0`` is the value of relaxing a cap, so emission
prices come out nonnegative (a charge) and sequestration prices nonpositive (a
payout). Quantities are in activity units, caps in milli-degC, prices in money
per unit (millions of dollars in the shipped scenarios).
"""

from __future__ import annotations

import enum
import math
import time
import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .kernels import WarmingKernel


class ModelError(ValueError):
    """An auction input is inconsistent (bad reference, out-of-horizon bid, missing cap)."""


class SolverError(RuntimeError):
    """The LP solver failed for a reason other than infeasibility."""


class BidSignWarning(UserWarning):
    """A bid's price sign does not match its activity kind."""


class Kind(str, enum.Enum):
    EMISSION = "emission"
    SEQUESTRATION = "sequestration"


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded_guard_tripped"


@dataclass(frozen=True)
class Activity:
    id: str
    name: str
    kind: Kind
    unit: str
    kernel_id: str

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))


@dataclass(frozen=True, order=True)
class Bid:
    """One agent's offer for one activity in one period.

    A negative ``price`` is a sequestration offer: the agent must be paid at
    least ``-price`` per unit.
    """

    agent: str
    activity: str
    period: int
    price: float
    max_qty: float

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.agent, self.activity, self.period)


@dataclass(frozen=True)
class CapSchedule:
    """Warming caps for periods ``Y..T``; uncapped (infinite) before ``Y``.

    Individual entries may also be ``inf``, which drops that period's row.
    """

    Y: int
    T: int
    caps: Mapping[int, float]

    def __post_init__(self):
        if self.Y > self.T:
            raise ModelError(f"cap schedule: Y={self.Y} is after T={self.T}")
        missing = [t for t in range(self.Y, self.T + 1) if t not in self.caps]
        if missing:
            raise ModelError(f"cap schedule: no cap for period(s) {missing[:5]} in [Y={self.Y}, T={self.T}]")
        object.__setattr__(self, "caps", {int(t): float(c) for t, c in self.caps.items()})

    @classmethod
    def net_zero(cls, Y: int, T: int, level: float = 0.0) -> CapSchedule:
        return cls(Y, T, {t: level for t in range(Y, T + 1)})

    @classmethod
    def unconstrained(cls, T: int, first: int = 1) -> CapSchedule:
        return cls(first, T, {t: math.inf for t in range(first, T + 1)})

    def cap(self, t: int) -> float:
        if t < self.Y:
            return math.inf
        return self.caps.get(t, math.inf)


@dataclass(frozen=True)
class AuctionConfig:
    """Auction calendar and physical boundary conditions.

    Periods are integers starting at 1; ``start_period`` and
    ``periods_per_year`` only map them to calendar labels.
    """

    start_period: float
    periods_per_year: int
    T_B: int
    T: int
    cap_schedule: CapSchedule
    initial_burdens: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.periods_per_year < 1:
            raise ModelError("periods_per_year must be >= 1")
        if not 1 <= self.T_B <= self.T:
            raise ModelError(f"need 1 <= T_B <= T, got T_B={self.T_B}, T={self.T}")
        if self.cap_schedule.T != self.T:
            raise ModelError(f"cap schedule ends at {self.cap_schedule.T}, config T={self.T}")

    def label(self, t: int) -> float:
        return self.start_period + (t - 1) / self.periods_per_year

    def period_of(self, year: float) -> int:
        return int(round((year - self.start_period) * self.periods_per_year)) + 1


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-9
    certificate: float = 1e-6


@dataclass
class ModelInstance:
    """An assembled, validated LP ready to clear.

    ``W`` has shape ``(P, T_B + 1, T + 1)`` and holds ``W[p, u, t]`` with
    ``u = 0`` reserved for the initial burden. ``base[t]`` is the burden warming.
    """

    config: AuctionConfig
    activities: tuple[Activity, ...]
    kernels: Mapping[str, WarmingKernel]
    bids: tuple[Bid, ...]
    W: np.ndarray
    base: np.ndarray
    cap_periods: tuple[int, ...]

    @property
    def P(self) -> int:
        return len(self.activities)

    @property
    def n_bid_vars(self) -> int:
        return len(self.bids)

    @property
    def n_vars(self) -> int:
        return len(self.bids) + self.P * self.config.T_B

    @property
    def n_caps(self) -> int:
        return self.config.T - self.config.cap_schedule.Y + 1

    @property
    def activity_index(self) -> dict[str, int]:
        return {a.id: i for i, a in enumerate(self.activities)}

    @property
    def activity_kernels(self) -> dict[str, WarmingKernel]:
        return {a.id: self.kernels[a.kernel_id] for a in self.activities}

    def cap(self, t: int) -> float:
        return self.config.cap_schedule.cap(t)

    def total_keys(self) -> list[tuple[str, int]]:
        return [(a.id, u) for a in self.activities for u in range(1, self.config.T_B + 1)]

    def warming_lhs(self, v: np.ndarray) -> np.ndarray:
        """Cap-row LHS for every ``t = 0..T`` given totals ``v`` of shape ``(P, T_B)``."""
        return self.base + np.einsum("pu,put->t", v, self.W[:, 1:, :])

    def bid_warming(self) -> np.ndarray:
        """``(n_bids, T + 1)`` warming per unit accepted for each bid."""
        idx = self.activity_index
        rows = [self.W[idx[b.activity], b.period] for b in self.bids]
        return np.array(rows).reshape(len(self.bids), self.config.T + 1)


def assemble_model(
    config: AuctionConfig,
    activities: Iterable[Activity],
    kernels: Mapping[str, WarmingKernel],
    bids: Iterable[Bid],
) -> ModelInstance:
    """Validate inputs and build the constraint data of the clearing LP.

    Bids are ordered by ``(agent, activity, period)`` so variable order, and
    therefore the solver path, is fixed for a given bid set.
    """
    activities = tuple(activities)
    ids = [a.id for a in activities]
    if len(set(ids)) != len(ids):
        raise ModelError(f"duplicate activity ids in {ids}")
    for a in activities:
        if a.kernel_id not in kernels:
            raise ModelError(f"activity {a.id!r} references unknown kernel {a.kernel_id!r}")
        if kernels[a.kernel_id].unit != a.unit:
            raise ModelError(
                f"activity {a.id!r} unit {a.unit!r} does not match kernel "
                f"{a.kernel_id!r} unit {kernels[a.kernel_id].unit!r}"
            )
    known = set(ids)
    for p, burden in config.initial_burdens.items():
        if p not in known:
            raise ModelError(f"initial burden given for unknown activity {p!r}")
    by_id = {a.id: a for a in activities}
    for p, burden in config.initial_burdens.items():
        if by_id[p].kind is Kind.EMISSION and burden < 0:
            raise ModelError(f"initial burden of emission activity {p!r} is negative")
        if by_id[p].kind is Kind.SEQUESTRATION and burden != 0:
            raise ModelError(f"sequestration activity {p!r} must have zero initial burden")

    sorted_bids = tuple(sorted(bids, key=lambda b: b.key))
    seen = set()
    for b in sorted_bids:
        if b.activity not in known:
            raise ModelError(f"bid {b.key} references unknown activity {b.activity!r}")
        if not 1 <= b.period <= config.T_B:
            raise ModelError(f"bid {b.key}: period {b.period} outside bidding horizon [1, {config.T_B}]")
        if not (b.max_qty >= 0 and math.isfinite(b.max_qty)):
            raise ModelError(f"bid {b.key}: max_qty must be finite and >= 0, got {b.max_qty}")
        if not math.isfinite(b.price):
            raise ModelError(f"bid {b.key}: non-finite price")
        if b.key in seen:
            raise ModelError(f"duplicate bid for {b.key}")
        seen.add(b.key)
        kind = by_id[b.activity].kind
        if (kind is Kind.SEQUESTRATION and b.price > 0) or (kind is Kind.EMISSION and b.price < 0):
            warnings.warn(f"bid {b.key}: price {b.price} has unexpected sign for {kind.value}", BidSignWarning)

    T, T_B = config.T, config.T_B
    W = np.stack([kernels[a.kernel_id].matrix(T_B, T) for a in activities]) if activities else np.zeros((0, T_B + 1, T + 1))
    base = np.zeros(T + 1)
    for i, a in enumerate(activities):
        base += config.initial_burdens.get(a.id, 0.0) * W[i, 0]
    sched = config.cap_schedule
    cap_periods = tuple(t for t in range(sched.Y, T + 1) if math.isfinite(sched.cap(t)))
    return ModelInstance(config, activities, dict(kernels), sorted_bids, W, base, cap_periods)


@dataclass
class ClearingResult:
    """Outcome of one clear. Mappings are empty unless ``status`` is optimal.

    ``violated_periods`` lists cap periods diagnosed as unattainable when the
    LP is infeasible.
    """

    status: Status
    q: dict[tuple[str, str, int], float] = field(default_factory=dict)
    v: dict[tuple[str, int], float] = field(default_factory=dict)
    prices: dict[tuple[str, int], float] = field(default_factory=dict)
    cap_duals: dict[int, float] = field(default_factory=dict)
    objective: float | None = None
    violated_periods: tuple[int, ...] = ()
    solve_time: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _lp_data(m: ModelInstance):
    nb, P, T_B = len(m.bids), m.P, m.config.T_B
    idx = m.activity_index
    nv = P * T_B
    rows = np.array([idx[b.activity] * T_B + (b.period - 1) for b in m.bids], dtype=int)
    a_eq = sparse.hstack(
        [
            sparse.csr_matrix((np.ones(nb), (rows, np.arange(nb))), shape=(nv, nb)),
            -sparse.identity(nv, format="csr"),
        ],
        format="csr",
    )
    caps = list(m.cap_periods)
    if caps:
        w_caps = m.W[:, 1:, caps].reshape(nv, len(caps)).T
        a_ub = sparse.hstack([sparse.csr_matrix((len(caps), nb)), sparse.csr_matrix(w_caps)], format="csr")
        b_ub = np.array([m.cap(t) - m.base[t] for t in caps])
    else:
        a_ub, b_ub = None, None
    bounds = [(0.0, b.max_qty) for b in m.bids] + [(None, None)] * nv
    return a_eq, a_ub, b_ub, bounds, caps


def _solve(c, a_ub, b_ub, a_eq, bounds, tol: Tolerances):
    options = {
        "primal_feasibility_tolerance": tol.feasibility,
        "dual_feasibility_tolerance": tol.feasibility,
        "presolve": True,
    }
    return linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=np.zeros(a_eq.shape[0]),
        bounds=bounds,
        method="highs-ds",
        options=options,
    )


def _unpack(m: ModelInstance, res, caps, status: Status, elapsed: float) -> ClearingResult:
    nb = len(m.bids)
    x = res.x
    q = {b.key: float(x[i]) for i, b in enumerate(m.bids)}
    v_arr = np.zeros(m.P * m.config.T_B)
    np.add.at(v_arr, [m.activity_index[b.activity] * m.config.T_B + b.period - 1 for b in m.bids], x[:nb])
    keys = m.total_keys()
    v = {k: float(val) for k, val in zip(keys, v_arr)}
    prices = {k: float(-mu) + 0.0 for k, mu in zip(keys, res.eqlin.marginals)}
    duals = {t: 0.0 for t in range(m.config.cap_schedule.Y, m.config.T + 1)}
    if caps:
        for t, mu in zip(caps, res.ineqlin.marginals):
            duals[t] = float(-mu) + 0.0
    return ClearingResult(status, q, v, prices, duals, float(np.dot([b.price for b in m.bids], x[:nb])), (), elapsed)


def clear(m: ModelInstance, tolerances: Tolerances = Tolerances()) -> ClearingResult:
    """Solve the clearing LP with HiGHS dual simplex.

    Returns an optimal result with primal and dual values, or an infeasible
    result whose ``violated_periods`` names the cap periods that cannot be met.
    Any other solver outcome raises :class:`SolverError`.
    """
    a_eq, a_ub, b_ub, bounds, caps = _lp_data(m)
    c = np.concatenate([-np.array([b.price for b in m.bids], dtype=float), np.zeros(m.P * m.config.T_B)])
    start = time.perf_counter()
    res = _solve(c, a_ub, b_ub, a_eq, bounds, tolerances)
    elapsed = time.perf_counter() - start
    if res.status == 0:
        return _unpack(m, res, caps, Status.OPTIMAL, elapsed)
    if res.status == 2:
        return ClearingResult(Status.INFEASIBLE, violated_periods=diagnose_infeasibility(m, tolerances), solve_time=elapsed)
    if res.status == 3:
        return ClearingResult(Status.UNBOUNDED, solve_time=elapsed)
    raise SolverError(f"HiGHS returned status {res.status}: {res.message}")


def solve_min_warming(m: ModelInstance, tolerances: Tolerances = Tolerances()) -> ClearingResult:
    """Accept bids to minimise the summed warming ``sum_{t=1..T} LHS[t]``; caps are ignored.

    The result's ``objective`` is still the accepted bid value; prices are the
    duals of this auxiliary program (marginal integrated warming per unit).
    """
    a_eq, _, _, bounds, _ = _lp_data(m)
    weight = m.W[:, 1:, 1:].sum(axis=2).reshape(-1)
    c = np.concatenate([np.zeros(len(m.bids)), weight])
    start = time.perf_counter()
    res = _solve(c, None, None, a_eq, bounds, tolerances)
    elapsed = time.perf_counter() - start
    if res.status != 0:
        raise SolverError(f"HiGHS returned status {res.status}: {res.message}")
    out = _unpack(m, res, [], Status.OPTIMAL, elapsed)
    out.cap_duals = {}
    return out


def diagnose_infeasibility(m: ModelInstance, tolerances: Tolerances = Tolerances()) -> tuple[int, ...]:
    """Cap periods that no allocation can satisfy.

    First the closed form: period ``t`` is hopeless when even accepting every
    bid that cools ``t`` and rejecting every bid that warms it leaves
    ``LHS[t] > Cap[t]``. If no single period fails that test (the caps
    conflict through shared variables), the periods with positive violation in
    a minimum-total-violation phase-one LP are returned instead.
    """
    if not m.cap_periods:
        return ()
    bw = m.bid_warming()
    qmax = np.array([b.max_qty for b in m.bids])
    lowest = m.base + (np.minimum(bw, 0.0) * qmax[:, None]).sum(axis=0) if len(m.bids) else m.base.copy()
    hopeless = tuple(t for t in m.cap_periods if lowest[t] > m.cap(t) + tolerances.certificate * (1 + abs(m.cap(t))))
    if hopeless:
        return hopeless

    # phase one: LHS_t - s_t <= Cap_t, s >= 0, minimise sum s
    a_eq, a_ub, b_ub, bounds, caps = _lp_data(m)
    k = len(caps)
    a_eq = sparse.hstack([a_eq, sparse.csr_matrix((a_eq.shape[0], k))], format="csr")
    a_ub = sparse.hstack([a_ub, -sparse.identity(k, format="csr")], format="csr")
    c = np.concatenate([np.zeros(a_eq.shape[1] - k), np.ones(k)])
    res = _solve(c, a_ub, b_ub, a_eq, bounds + [(0.0, None)] * k, tolerances)
    if res.status != 0:
        raise SolverError(f"phase-one LP failed: {res.message}")
    slack = res.x[-k:]
    return tuple(t for t, s in zip(caps, slack) if s > tolerances.certificate)


@dataclass
class ConditionCheck:
    ok: bool
    worst: float = 0.0
    detail: str = ""


@dataclass
class CertificateReport:
    """Results of the five optimality checks, keyed by condition name."""

    conditions: dict[str, ConditionCheck]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.conditions.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, c in self.conditions.items() if not c.ok]

    def summary(self) -> str:
        lines = []
        for name, c in self.conditions.items():
            mark = "ok  " if c.ok else "FAIL"
            lines.append(f"{mark} {name}: worst={c.worst:.3e} {c.detail}".rstrip())
        return "\n".join(lines)


CONDITIONS = ("i_primal_feasibility", "ii_dual_feasibility", "iii_price_identity", "iv_cap_slackness", "v_bid_reduced_costs")


def _check(violations: np.ndarray, scale: np.ndarray, tol: float, labels: Sequence) -> ConditionCheck:
    """Pass iff every ``violation <= tol * (1 + scale)``; ``worst`` is the largest normalised violation."""
    if violations.size == 0:
        return ConditionCheck(True)
    norm = violations / (1.0 + scale)
    i = int(np.argmax(norm))
    worst = float(norm[i])
    ok = worst <= tol
    return ConditionCheck(ok, max(worst, 0.0), "" if ok else f"at {labels[i]}")


def verify_certificate(m: ModelInstance, r: ClearingResult, tol: float = 1e-6) -> CertificateReport:
    """Check primal feasibility, dual feasibility and complementary slackness.

    Every residual is normalised by ``1 + (magnitude of the terms involved)``
    before comparison with ``tol``, so the same tolerance applies to instances
    whose data differ by orders of magnitude.
    """
    if r.status is not Status.OPTIMAL:
        raise ModelError("certificate requires an optimal result")
    T_B, T = m.config.T_B, m.config.T
    keys = m.total_keys()
    q = np.array([r.q.get(b.key, 0.0) for b in m.bids])
    qmax = np.array([b.max_qty for b in m.bids])
    price_b = np.array([b.price for b in m.bids])
    v = np.array([r.v.get(k, 0.0) for k in keys]).reshape(m.P, T_B)
    pi = np.array([r.prices.get(k, 0.0) for k in keys]).reshape(m.P, T_B)
    omega = np.zeros(T + 1)
    for t, w in r.cap_duals.items():
        if 0 <= t <= T:
            omega[t] = w
    caps = list(m.cap_periods)
    conds: dict[str, ConditionCheck] = {}

    # (i) bounds, totals, caps
    sums = np.zeros(m.P * T_B)
    idx = m.activity_index
    pos = np.array([idx[b.activity] * T_B + b.period - 1 for b in m.bids], dtype=int)
    hi = np.zeros(m.P * T_B)
    if len(m.bids):
        np.add.at(sums, pos, q)
        np.add.at(hi, pos, np.abs(q))
    lhs = m.warming_lhs(v)
    cap_terms = np.abs(m.base) + np.einsum("pu,put->t", np.abs(v), np.abs(m.W[:, 1:, :]))
    capv = np.array([lhs[t] - m.cap(t) for t in caps])
    capscale = np.array([cap_terms[t] + abs(m.cap(t)) for t in caps])
    viol = np.concatenate([-q, q - qmax, np.abs(v.reshape(-1) - sums), capv])
    scale = np.concatenate([qmax, qmax, hi, capscale])
    labels = (
        [f"q>=0 {b.key}" for b in m.bids]
        + [f"q<=Q {b.key}" for b in m.bids]
        + [f"totals {k}" for k in keys]
        + [f"cap t={t}" for t in caps]
    )
    conds[CONDITIONS[0]] = _check(viol, scale, tol, labels)

    # (ii) sum_t W w - pi >= 0 for every (p, u), and omega >= 0
    mask = np.zeros(T + 1)
    mask[caps] = 1.0
    implied = np.einsum("put,t->pu", m.W[:, 1:, :], omega * mask)
    implied_scale = np.einsum("put,t->pu", np.abs(m.W[:, 1:, :]), np.abs(omega) * mask)
    viol = np.concatenate([(pi - implied).reshape(-1), -omega[caps]])
    scale = np.concatenate([(implied_scale + np.abs(pi)).reshape(-1), np.zeros(len(caps))])
    conds[CONDITIONS[1]] = _check(viol, scale, tol, [f"{k}" for k in keys] + [f"omega t={t}" for t in caps])

    # (iii) pi = sum_t W w where v > 0
    active = (v > tol).reshape(-1)
    gap = np.abs(pi - implied).reshape(-1)[active]
    gscale = (implied_scale + np.abs(pi)).reshape(-1)[active]
    conds[CONDITIONS[2]] = _check(gap, gscale, tol, [k for k, a in zip(keys, active) if a])

    # (iv) omega_t (Cap_t - LHS_t) ~ 0
    cs = np.array([omega[t] * (m.cap(t) - lhs[t]) for t in caps])
    cscale = np.array([abs(omega[t]) * (cap_terms[t] + abs(m.cap(t))) for t in caps])
    conds[CONDITIONS[3]] = _check(np.abs(cs), cscale, tol, [f"t={t}" for t in caps])

    # (v) reduced cost sign of each bid against its activity price
    if len(m.bids):
        pib = pi.reshape(-1)[pos]
        red = price_b - pib
        band = tol * (1.0 + qmax)
        at_zero = q <= band
        at_top = q >= qmax - band
        viol = np.zeros(len(m.bids))
        interior = ~at_zero & ~at_top
        viol[interior] = np.abs(red[interior])
        only_zero = at_zero & ~at_top
        viol[only_zero] = red[only_zero]
        only_top = at_top & ~at_zero
        viol[only_top] = -red[only_top]
        rscale = np.abs(price_b) + np.abs(pib)
        conds[CONDITIONS[4]] = _check(viol, rscale, tol, [b.key for b in m.bids])
    else:
        conds[CONDITIONS[4]] = ConditionCheck(True)
    return CertificateReport(conds)


def _bid_price_map(bids: Iterable[Bid]) -> dict[tuple[str, str, int], float]:
    return {b.key: b.price for b in bids}


def revenue_eq6(r: ClearingResult, bids: Iterable[Bid]) -> float:
    """Manager revenue ``sum q * pi * sgn(B)`` with ``sgn(B) = -1`` iff ``B < 0``, taken literally."""
    prices = _bid_price_map(bids)
    total = 0.0
    for key, qty in r.q.items():
        sign = -1.0 if prices[key] < 0 else 1.0
        total += qty * r.prices[(key[1], key[2])] * sign
    return total


def revenue_net(r: ClearingResult) -> float:
    """Net cash to the manager: every accepted unit pays its activity price ``pi`` (negative = payout)."""
    return float(sum(qty * r.prices[(key[1], key[2])] for key, qty in r.q.items()))


@dataclass(frozen=True)
class PriceTable:
    periods: tuple[int, ...]
    activities: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]  # values[i][j]: period i, activity j
    display_sign: bool = False

    def get(self, period: int, activity: str) -> float:
        return self.values[self.periods.index(period)][self.activities.index(activity)]


def price_table(
    r: ClearingResult,
    periods: Sequence[int],
    activities: Sequence[str],
    display_sign: bool = False,
) -> PriceTable:
    """Sample activity prices at ``periods``.

    ``display_sign`` negates every price so emissions show negative and
    sequestration positive.
    """
    sign = -1.0 if display_sign else 1.0
    rows = []
    for t in periods:
        row = []
        for p in activities:
            if (p, t) not in r.prices:
                raise ModelError(f"no price for activity {p!r} in period {t} (outside bidding horizon?)")
            row.append(sign * r.prices[(p, t)] + 0.0)
        rows.append(tuple(row))
    return PriceTable(tuple(periods), tuple(activities), tuple(rows), display_sign)


def allocation_report(r: ClearingResult, bids: Iterable[Bid]) -> dict[tuple[str, int], float]:
    """Accepted share of offered quantity for each ``(activity, period)`` in ``r.v``; 0 if nothing was offered."""
    offered: dict[tuple[str, int], float] = {}
    accepted: dict[tuple[str, int], float] = {}
    for b in bids:
        k = (b.activity, b.period)
        offered[k] = offered.get(k, 0.0) + b.max_qty
        accepted[k] = accepted.get(k, 0.0) + r.q.get(b.key, 0.0)
    out = {}
    for k in r.v:
        den = offered.get(k, 0.0)
        out[k] = accepted[k] / den if den > 0 else 0.0
    return out
