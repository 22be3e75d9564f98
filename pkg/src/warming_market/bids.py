"""Bid books: agriculture, forestry and marginal-abatement-cost stacks.

A :class:`BidStack` is an annual supply or demand ladder for one activity.
Prices are stored as positive unit costs for both sides; the sign of the
corresponding LP bid is applied by :func:`replicate_bids_over_periods`
(sequestration offers become negative prices).
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .auction import Bid, Kind

log = logging.getLogger(__name__)

AGRICULTURE_COEFFS = (0.0587, 39.613, 926.25)  # Mt CO2/yr = a p^2 + b p + c, p in $/t
FORESTRY_TYPES = ("black_walnut", "loblolly_pine", "ponderosa_pine")

BID_BOOK_HEADER = ["agent", "activity", "period", "price", "max_qty"]


class BidError(ValueError):
    """Raised for invalid generator parameters or malformed input rows."""


@dataclass(frozen=True)
class BidStack:
    """Annual ladder of ``(price, incremental quantity per year)`` entries."""

    activity: str
    side: Kind
    entries: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "side", Kind(self.side))
        entries = tuple((float(p), float(q)) for p, q in self.entries)
        if any(q < 0 for _, q in entries):
            raise BidError(f"stack {self.activity!r}: negative incremental quantity")
        object.__setattr__(self, "entries", entries)

    @property
    def total(self) -> float:
        return sum(q for _, q in self.entries)

    def cumulative(self) -> np.ndarray:
        return np.cumsum([q for _, q in self.entries])

    def scaled(self, qty_factor: float = 1.0, price_factor: float = 1.0) -> BidStack:
        """Re-denominate, e.g. hectares at $/ha into kha at $m/kha (both factors 1e-3)."""
        return BidStack(
            self.activity, self.side, tuple((p * price_factor, q * qty_factor) for p, q in self.entries)
        )


def agriculture_bids(
    price_step: float = 4.0,
    price_max: float = 224.0,
    cap_qty: float = 6854.0,
    coefficients: Sequence[float] = AGRICULTURE_COEFFS,
    activity: str = "agriculture",
) -> BidStack:
    """Agricultural sequestration ladder from a quadratic cumulative supply fit.

    Levels sit at ``0, step, 2*step, ..., price_max``. Supply at price 0 is
    zero by assumption, so the $0 level carries no quantity. Each later level
    offers the increase in cumulative supply since the previous level, with
    cumulative supply clamped at ``cap_qty``.
    """
    if not price_step > 0:
        raise BidError("price_step must be positive")
    if price_max <= 0:
        return BidStack(activity, Kind.SEQUESTRATION, ())
    a, b, c = coefficients
    n = int(math.floor(price_max / price_step + 1e-9))
    prices = [k * price_step for k in range(n + 1)]
    raw = [0.0] + [a * p * p + b * p + c for p in prices[1:]]
    for k in range(1, len(raw)):
        if raw[k] < raw[k - 1]:
            raise BidError(
                f"agriculture fit decreases between ${prices[k - 1]:g} and ${prices[k]:g} "
                f"({raw[k - 1]:.2f} -> {raw[k]:.2f} Mt/yr)"
            )
    cum = [min(x, cap_qty) for x in raw]
    clamped = [p for p, x in zip(prices, raw) if x > cap_qty]
    if clamped:
        log.info("agriculture supply clamped at %g Mt/yr from $%g/t upward", cap_qty, clamped[0])
    entries = [(prices[0], 0.0)] + [(prices[k], cum[k] - cum[k - 1]) for k in range(1, len(prices))]
    return BidStack(activity, Kind.SEQUESTRATION, tuple(entries))


def forestry_bids(
    total_area: float = 500e6,
    ramp_years: int = 20,
    n_types: int = 3,
    qty_step: float = 25_000.0,
    price_low: float = 1724.0,
    price_high: float = 82028.0,
    types: Sequence[str] | None = None,
) -> list[BidStack]:
    """Planting ladders in hectares per year and $ per hectare, one per tree type.

    The total planting rate ``total_area / ramp_years`` is split equally
    across types. Each type's ladder has rungs of ``qty_step`` (the last rung
    takes the remainder) priced linearly from ``price_low`` to ``price_high``.
    """
    if n_types < 1:
        raise BidError("n_types must be >= 1")
    if not qty_step > 0:
        raise BidError("qty_step must be positive")
    if price_low > price_high:
        raise BidError(f"price_low {price_low} exceeds price_high {price_high}")
    if types is None:
        types = FORESTRY_TYPES if n_types == len(FORESTRY_TYPES) else tuple(f"forest_{i}" for i in range(n_types))
    if len(types) != n_types:
        raise BidError("types must name each of the n_types tree types")
    per_type = total_area / ramp_years / n_types
    n_full = int(math.floor(per_type / qty_step + 1e-9))
    qtys = [qty_step] * n_full
    rest = per_type - n_full * qty_step
    if rest > 1e-9 * per_type:
        qtys.append(rest)
    n = len(qtys)
    prices = [price_low] if n == 1 else list(np.linspace(price_low, price_high, n))
    return [BidStack(name, Kind.SEQUESTRATION, tuple(zip(prices, qtys))) for name in types]


def ingest_mac_stack(
    file: str | Path,
    currency_rate: float,
    inflation_factor: float,
    increment: float = 10.0,
    upper_bound: float = 1000.0,
    activity: str = "co2",
) -> BidStack:
    """Emission bid ladder from a marginal abatement cost CSV.

    Rows are ``price, quantity, currency_year`` in source currency. Rows with
    negative cost are omitted, as are rows priced above ``upper_bound``
    (source currency). Equal prices merge; the ladder is sorted by price and
    cut into ``increment``-sized entries. Prices convert as
    ``price * currency_rate * inflation_factor``.
    """
    path = Path(file)
    merged: dict[float, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if row.strip() and not row.lstrip().startswith("#"))
        header = next(reader, None)
        if header is None:
            return BidStack(activity, Kind.EMISSION, ())
        if [h.strip() for h in header] != ["price", "quantity", "currency_year"]:
            raise BidError(f"{path}: expected header price,quantity,currency_year, got {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                price, qty = float(row[0]), float(row[1])
                int(row[2])
            except (IndexError, ValueError):
                raise BidError(f"{path}, row {lineno}: malformed row {row}") from None
            if not qty > 0:
                raise BidError(f"{path}, row {lineno}: quantity must be positive, got {qty}")
            if price < 0 or price > upper_bound:
                continue
            merged[price] = merged.get(price, 0.0) + qty
    if not increment > 0:
        raise BidError("increment must be positive")
    entries = []
    for price in sorted(merged):
        remaining = merged[price]
        target = price * currency_rate * inflation_factor
        while remaining > 1e-12 * merged[price]:
            chunk = min(increment, remaining)
            entries.append((target, chunk))
            remaining -= chunk
    return BidStack(activity, Kind.EMISSION, tuple(entries))


def linear_mac_stack(activity: str, annual_quantity: float, price_max: float, levels: int) -> BidStack:
    """Synthetic emission ladder: ``levels`` equal slices priced evenly up to ``price_max``."""
    if levels < 1:
        raise BidError("levels must be >= 1")
    qty = annual_quantity / levels
    return BidStack(
        activity, Kind.EMISSION, tuple((price_max * (k + 0.5) / levels, qty) for k in range(levels))
    )


def replicate_bids_over_periods(
    stack: BidStack,
    first_period: int,
    T_B: int,
    periods_per_year: int,
) -> list[Bid]:
    """One bid per stack entry per period in ``first_period..T_B``.

    Annual quantities are split evenly over the periods of a year. The agent
    id is ``"<activity>:<level>"``, so each price level acts as one agent.
    """
    if periods_per_year < 1:
        raise BidError("periods_per_year must be >= 1")
    sign = -1.0 if stack.side is Kind.SEQUESTRATION else 1.0
    out = []
    for period in range(first_period, T_B + 1):
        for level, (price, qty) in enumerate(stack.entries):
            out.append(Bid(f"{stack.activity}:{level:03d}", stack.activity, period, sign * price, qty / periods_per_year))
    return out


def write_bid_book(path: str | Path, bids: Iterable[Bid]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BID_BOOK_HEADER)
        for b in sorted(bids, key=lambda b: b.key):
            writer.writerow([b.agent, b.activity, b.period, repr(float(b.price)), repr(float(b.max_qty))])


def read_bid_book(path: str | Path) -> list[Bid]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != BID_BOOK_HEADER:
            raise BidError(f"{path}: expected header {','.join(BID_BOOK_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append(Bid(row[0], row[1], int(row[2]), float(row[3]), float(row[4])))
            except (IndexError, ValueError):
                raise BidError(f"{path}, line {lineno}: malformed bid row {row}") from None
    return out
