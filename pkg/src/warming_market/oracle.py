"""Independent checks of the clearing engine on small instances.

Nothing here calls the LP solver. The grid oracle enumerates accepted
quantities on a lattice; the knapsack oracle solves the single-cap,
same-period-kernel subclass greedily by value per milli-degree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .auction import Activity, AuctionConfig, Bid, BidSignWarning, CapSchedule, ModelInstance, assemble_model
from .kernels import WarmingKernel

MAX_GRID_VARS = 9
MAX_GRID_POINTS = 21
_CHUNK = 1 << 17


class OracleError(ValueError):
    """Instance is outside the oracle's precondition."""


@dataclass
class OracleResult:
    feasible: bool
    objective: float | None = None
    q: dict[tuple[str, str, int], float] | None = None
    omega: float | None = None


def grid_resolution_bound(m: ModelInstance, grid_points_per_var: int) -> float:
    """Largest admissible gap between the LP and grid optima: ``sum |B| Q / (g - 1)``."""
    return sum(abs(b.price) * b.max_qty for b in m.bids) / (grid_points_per_var - 1)


def grid_search_oracle(m: ModelInstance, grid_points_per_var: int = 11) -> OracleResult:
    """Best cap-feasible allocation over the lattice ``q_i in linspace(0, Q_i, g)``.

    The grid optimum never exceeds the LP optimum. When every kernel keeps one
    sign across lags it is also within :func:`grid_resolution_bound` of it,
    since rounding each accepted quantity toward less warming stays feasible.
    """
    n = len(m.bids)
    g = grid_points_per_var
    if n > MAX_GRID_VARS:
        raise OracleError(f"{n} bid variables exceeds the grid oracle limit of {MAX_GRID_VARS}")
    if not 2 <= g <= MAX_GRID_POINTS:
        raise OracleError(f"grid_points_per_var must be in [2, {MAX_GRID_POINTS}]")
    caps = list(m.cap_periods)
    cap_vals = np.array([m.cap(t) for t in caps])
    base = m.base[caps]
    slack_tol = 1e-9 * (1.0 + np.abs(cap_vals))
    if n == 0:
        ok = bool(np.all(base <= cap_vals + slack_tol))
        return OracleResult(ok, 0.0 if ok else None, {} if ok else None)

    levels = np.stack([np.linspace(0.0, b.max_qty, g) for b in m.bids])  # (n, g)
    prices = np.array([b.price for b in m.bids])
    warm = m.bid_warming()[:, caps]  # (n, k)
    best_val, best_idx = -math.inf, None
    total = g**n
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        digits = np.array(np.unravel_index(flat, (g,) * n))  # (n, chunk)
        qs = levels[np.arange(n)[:, None], digits]  # (n, chunk)
        lhs = base[:, None] + warm.T @ qs  # (k, chunk)
        feas = np.all(lhs <= (cap_vals + slack_tol)[:, None], axis=0)
        if not feas.any():
            continue
        vals = np.where(feas, prices @ qs, -math.inf)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_idx = float(vals[j]), qs[:, j].copy()
    if best_idx is None:
        return OracleResult(False)
    return OracleResult(True, best_val, {b.key: float(x) for b, x in zip(m.bids, best_idx)})


def _is_same_period_kernel(m: ModelInstance, i: int) -> bool:
    W = m.W[i]
    T_B, T = W.shape[0] - 1, W.shape[1] - 1
    for u in range(1, T_B + 1):
        row = W[u].copy()
        row[u] = 0.0
        if np.any(row != 0):
            return False
    return True


def knapsack_oracle(m: ModelInstance, eps: float = 1e-12) -> OracleResult:
    """Exact optimum for at most one finite cap and kernels acting only in the bid period.

    Bids in other periods face no constraint and are accepted iff their price
    is positive. In the capped period each bid is an item with warming
    ``w = W * Q`` and value ``B * Q``. Items that earn money and cool, or are
    free and cool, are always taken; items that cost money and warm are never
    taken. The rest are emissions (value per milli-degC ``B/w``) and
    sequestration offers (cost per milli-degC ``B/w``). Sweeping the cap
    price downward from infinity, emissions switch on and sequestration
    switches off; the sweep stops at the level where the cap binds, and that
    level is the cap's dual price.
    """
    if len(m.cap_periods) > 1:
        raise OracleError("knapsack oracle needs at most one finite cap period")
    for i, a in enumerate(m.activities):
        if not _is_same_period_kernel(m, i):
            raise OracleError(f"kernel of activity {a.id!r} acts outside its bid period")
    if not m.cap_periods:
        q = {b.key: (b.max_qty if b.price > 0 else 0.0) for b in m.bids}
        return OracleResult(True, sum(b.price * q[b.key] for b in m.bids), q, 0.0)
    (t_cap,) = m.cap_periods
    idx = m.activity_index
    q: dict[tuple[str, str, int], float] = {}
    room = m.cap(t_cap) - m.base[t_cap]
    emis, seq = [], []  # (ratio, warming per unit, bid)
    for b in m.bids:
        w = m.W[idx[b.activity], b.period, t_cap] if b.period == t_cap else 0.0
        if w == 0.0:
            q[b.key] = b.max_qty if b.price > 0 else 0.0
        elif w < 0 and b.price >= 0:
            q[b.key] = b.max_qty
            room -= w * b.max_qty
        elif w > 0 and b.price <= 0:
            q[b.key] = 0.0
        elif w > 0:
            emis.append((b.price / w, w, b))
            q[b.key] = 0.0
        else:
            seq.append((b.price / w, w, b))
            q[b.key] = b.max_qty
            room -= w * b.max_qty

    scale = 1.0 + abs(m.cap(t_cap)) + abs(m.base[t_cap])
    if room < -eps * scale:
        return OracleResult(False)

    omega = 0.0
    levels = sorted({r for r, _, _ in emis} | {r for r, _, _ in seq}, reverse=True)
    for level in levels:
        e_items = [(w, b) for r, w, b in emis if r == level]
        s_items = [(w, b) for r, w, b in seq if r == level]
        need = sum(w * b.max_qty for w, b in e_items) + sum(-w * b.max_qty for w, b in s_items)
        if need <= room + eps * scale:
            for w, b in e_items:
                q[b.key] = b.max_qty
            for w, b in s_items:
                q[b.key] = 0.0
            room -= need
            continue
        # cap binds at this level: fill the remaining room with emissions first,
        # then switch off sequestration; every unit here has zero reduced cost
        omega = level
        for w, b in e_items:
            take = min(b.max_qty, max(room, 0.0) / w)
            q[b.key] = take
            room -= w * take
        for w, b in s_items:
            drop = min(b.max_qty, max(room, 0.0) / -w)
            q[b.key] = b.max_qty - drop
            room -= -w * drop
        break
    objective = sum(b.price * q[b.key] for b in m.bids)
    return OracleResult(True, objective, q, omega)


KERNEL_SHAPES = ("delta", "persistent", "two_lag")


def random_knapsack_instance(rng: np.random.Generator, max_bids: int = 8) -> ModelInstance:
    """Seeded instance in the knapsack subclass: same-period kernels, one finite cap.

    Ratios are drawn from a small set of values so that ties between
    emission and sequestration levels occur.
    """
    T = int(rng.integers(1, 4))
    t_cap = int(rng.integers(1, T + 1))
    activities, kernels = [], {}
    for i, sign in enumerate((1.0, -1.0, 1.0)):
        kid = f"d{i}"
        kernels[kid] = WarmingKernel(kid, "u", response=[sign * float(rng.choice([0.5, 1.0, 2.0]))])
        activities.append(Activity(f"p{i}", f"activity {i}", "emission" if sign > 0 else "sequestration", "u", kid))
    bids = []
    for j in range(int(rng.integers(0, max_bids + 1))):
        a = activities[int(rng.integers(0, len(activities)))]
        magnitude = float(rng.choice([1.0, 2.0, 3.0, 4.0, 6.0, 8.0]))
        price = magnitude if a.kind.value == "emission" else -magnitude
        if rng.random() < 0.1:
            price = -price
        bids.append(Bid(f"a{j}", a.id, int(rng.integers(1, T + 1)), price, float(rng.integers(0, 11))))
    caps = {t: (float(np.round(rng.uniform(-3.0, 10.0), 2)) if t == t_cap else math.inf) for t in range(1, T + 1)}
    burdens = {"p0": float(rng.choice([0.0, 0.0, 1.0, 2.0]))}
    config = AuctionConfig(1, 1, T, T, CapSchedule(1, T, caps), burdens)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BidSignWarning)
        return assemble_model(config, activities, kernels, bids)


def random_instance(rng: np.random.Generator, max_bids: int = 5) -> ModelInstance:
    """Seeded tiny instance for oracle comparisons.

    One or two activities with one-signed kernels drawn from delta,
    persistent and two-lag shapes; bid prices in [-10, 10]; quantities in
    [0, 10]; one to three periods; caps and burdens small enough to produce a
    mix of binding, slack and infeasible cases.
    """
    T_B = int(rng.integers(1, 3))
    T = T_B + int(rng.integers(0, 2))
    n_act = int(rng.integers(1, 3))
    activities, kernels = [], {}
    for i in range(n_act):
        sign = 1.0 if (i == 0 or rng.random() < 0.5) else -1.0
        shape = KERNEL_SHAPES[int(rng.integers(0, 3))]
        mag = float(rng.uniform(0.5, 2.0))
        if shape == "delta":
            resp = [mag]
        elif shape == "persistent":
            resp = [mag] * (T + 1)
        else:
            resp = [mag, mag / 2]
        kid = f"k{i}"
        kernels[kid] = WarmingKernel(kid, "u", response=[sign * x for x in resp])
        kind = "emission" if sign > 0 else "sequestration"
        activities.append(Activity(f"p{i}", f"activity {i}", kind, "u", kid))
    slots = [(a.id, u) for a in activities for u in range(1, T_B + 1)]
    n_bids = int(rng.integers(0, max_bids + 1))
    bids = []
    for j in range(n_bids):
        p, u = slots[int(rng.integers(0, len(slots)))]
        price = float(np.round(rng.uniform(-10, 10), 3))
        qty = float(np.round(rng.uniform(0, 10), 3))
        bids.append(Bid(f"a{j}", p, u, price, qty))
    Y = int(rng.integers(1, T + 1))
    caps = {t: float(np.round(rng.uniform(-2.0, 8.0), 3)) for t in range(Y, T + 1)}
    burdens = {a.id: float(np.round(rng.uniform(0, 2), 3)) for a in activities if a.kind.value == "emission"}
    config = AuctionConfig(1, 1, T_B, T, CapSchedule(Y, T, caps), burdens)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BidSignWarning)
        return assemble_model(config, activities, kernels, bids)


__all__ = [
    "OracleError",
    "OracleResult",
    "grid_resolution_bound",
    "grid_search_oracle",
    "knapsack_oracle",
    "random_instance",
    "random_knapsack_instance",
]
