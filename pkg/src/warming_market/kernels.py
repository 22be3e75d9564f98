"""Warming kernels: per-unit temperature responses of each activity.

A kernel gives W[u, t], the milli-degree-C change in period ``t`` caused by one
unit of an activity performed in period ``u`` (``u <= t``). Two storage forms
exist. A time-invariant kernel keeps a lag response ``r[k]`` with
``W[u, t] = r[t - u]``; a vintage kernel keeps an explicit ``(u, t)`` table.

The module also carries the linear box-model climate stub used to generate
synthetic kernels, the pulse-difference extraction procedure, the forestry
vintage convolution, and temperature reconstruction from cleared volumes.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRUNCATION_WARN_FRACTION = 0.01


class KernelError(ValueError):
    """Raised for malformed or inconsistent kernel inputs."""


class KernelTruncationWarning(UserWarning):
    """Emitted when truncating a kernel drops more than 1% of its mass."""


@dataclass(frozen=True)
class WarmingKernel:
    """Per-unit warming response of one activity.

    Exactly one of ``response`` (time-invariant, indexed by lag) or ``table``
    (vintage, keyed by ``(u, t)``) is set.
    """

    id: str
    unit: str
    response: tuple[float, ...] | None = None
    table: Mapping[tuple[int, int], float] | None = field(default=None, compare=True)

    def __post_init__(self):
        if (self.response is None) == (self.table is None):
            raise KernelError(f"kernel {self.id!r}: exactly one of response/table must be given")
        if self.response is not None:
            object.__setattr__(self, "response", tuple(float(x) for x in self.response))
            if not all(math.isfinite(x) for x in self.response):
                raise KernelError(f"kernel {self.id!r}: non-finite response value")
        else:
            table = {}
            for (u, t), value in self.table.items():
                if t < u:
                    raise KernelError(f"kernel {self.id!r}: entry (u={u}, t={t}) has t < u")
                table[(int(u), int(t))] = float(value)
            object.__setattr__(self, "table", table)

    @property
    def form(self) -> str:
        return "time_invariant" if self.response is not None else "vintage"

    @property
    def support(self) -> int:
        """Number of stored lags (time-invariant) or the largest stored ``t - u`` + 1."""
        if self.response is not None:
            return len(self.response)
        return max((t - u for u, t in self.table), default=-1) + 1

    def value(self, u: int, t: int) -> float:
        if t < u:
            return 0.0
        if self.response is not None:
            k = t - u
            return self.response[k] if k < len(self.response) else 0.0
        return self.table.get((u, t), 0.0)

    def matrix(self, last_u: int, last_t: int) -> np.ndarray:
        """Dense ``W[u, t]`` for ``u = 0..last_u`` and ``t = 0..last_t``; zero-extended."""
        out = np.zeros((last_u + 1, last_t + 1))
        if self.response is not None:
            r = np.asarray(self.response)
            for u in range(last_u + 1):
                n = min(len(r), last_t - u + 1)
                if n > 0:
                    out[u, u : u + n] = r[:n]
        else:
            for (u, t), value in self.table.items():
                if u <= last_u and t <= last_t:
                    out[u, t] = value
        return out

    def negated(self, kernel_id: str | None = None) -> WarmingKernel:
        if self.response is not None:
            return WarmingKernel(kernel_id or self.id, self.unit, response=tuple(-x for x in self.response))
        return WarmingKernel(kernel_id or self.id, self.unit, table={k: -x for k, x in self.table.items()})


def kernel_mass(kernel: WarmingKernel) -> float:
    if kernel.response is not None:
        return float(np.abs(kernel.response).sum())
    return float(sum(abs(x) for x in kernel.table.values()))


def truncate_kernel(kernel: WarmingKernel, horizon: int) -> WarmingKernel:
    """Keep lags ``0..horizon - 1`` (or table entries with ``t < horizon``).

    Warns with :class:`KernelTruncationWarning` when the dropped tail carries
    more than 1% of the kernel's absolute mass.
    """
    total = kernel_mass(kernel)
    if kernel.response is not None:
        kept = WarmingKernel(kernel.id, kernel.unit, response=kernel.response[:horizon])
    else:
        kept = WarmingKernel(
            kernel.id, kernel.unit, table={k: x for k, x in kernel.table.items() if k[1] < horizon}
        )
    dropped = total - kernel_mass(kept)
    if total > 0 and dropped > TRUNCATION_WARN_FRACTION * total:
        warnings.warn(
            f"kernel {kernel.id!r}: truncation at horizon {horizon} drops "
            f"{dropped / total:.1%} of kernel mass",
            KernelTruncationWarning,
            stacklevel=2,
        )
    return kept


def resample_kernel(kernel: WarmingKernel, periods_per_year: int) -> WarmingKernel:
    """Spread an annual time-invariant kernel over sub-annual periods by repetition."""
    if kernel.response is None:
        raise KernelError(f"kernel {kernel.id!r}: only time-invariant kernels can be resampled")
    if periods_per_year < 1:
        raise KernelError("periods_per_year must be >= 1")
    return WarmingKernel(kernel.id, kernel.unit, response=np.repeat(kernel.response, periods_per_year))


def make_box_kernel(
    kernel_id: str,
    unit: str,
    weights: Sequence[float],
    taus: Sequence[float],
    scale: float,
    horizon: int,
) -> WarmingKernel:
    """Sum-of-exponentials kernel ``r[k] = scale * sum_i w_i exp(-k / tau_i)``.

    ``tau = inf`` gives a persistent box. The result has ``horizon`` lags.
    """
    if horizon < 1:
        raise KernelError("horizon must be >= 1")
    if len(weights) != len(taus):
        raise KernelError(f"kernel {kernel_id!r}: weights and taus differ in length")
    if sum(weights) > 1.0 + 1e-12:
        raise KernelError(f"kernel {kernel_id!r}: decay weights sum to more than 1")
    if any(not tau > 0 for tau in taus):
        raise KernelError(f"kernel {kernel_id!r}: e-folding times must be positive")
    k = np.arange(horizon, dtype=float)
    r = np.zeros(horizon)
    for w, tau in zip(weights, taus):
        r += w * (np.ones(horizon) if math.isinf(tau) else np.exp(-k / tau))
    return WarmingKernel(kernel_id, unit, response=scale * r)


@dataclass(frozen=True)
class GasParams:
    unit: str
    weights: tuple[float, ...]
    taus: tuple[float, ...]
    scale: float  # milli-degC per unit still airborne
    baseline: float  # units emitted per period on the reference path


@dataclass(frozen=True)
class ClimateStub:
    """Linear, time-invariant box model standing in for a full climate simulator.

    Warming from a gas is the convolution of its emission path with the gas's
    sum-of-exponentials impulse response, so superposition holds exactly.
    """

    gases: Mapping[str, GasParams]

    def impulse_response(self, gas: str, horizon: int) -> np.ndarray:
        g = self._gas(gas)
        return np.asarray(make_box_kernel(gas, g.unit, g.weights, g.taus, g.scale, horizon).response)

    def simulate(self, gas: str, emissions: Sequence[float]) -> np.ndarray:
        """Temperature path (milli-degC) for ``emissions[0..n-1]``, one value per period."""
        e = np.asarray(emissions, dtype=float)
        r = self.impulse_response(gas, len(e))
        return np.convolve(e, r)[: len(e)]

    def baseline_path(self, gas: str, horizon: int) -> np.ndarray:
        return np.full(horizon, self._gas(gas).baseline, dtype=float)

    def _gas(self, gas: str) -> GasParams:
        try:
            return self.gases[gas]
        except KeyError:
            raise KernelError(f"climate stub has no gas {gas!r}") from None


def load_climate_stub(path: str | Path) -> ClimateStub:
    """Read per-gas parameters from a YAML file (``gases: {name: {...}}``)."""
    import yaml

    with open(path) as fh:
        raw = yaml.safe_load(fh)
    gases = {}
    for name, entry in raw["gases"].items():
        taus = tuple(math.inf if str(t).lower() in ("inf", ".inf") else float(t) for t in entry["taus"])
        gases[name] = GasParams(
            unit=entry["unit"],
            weights=tuple(float(w) for w in entry["weights"]),
            taus=taus,
            scale=float(entry["scale"]),
            baseline=float(entry["baseline"]),
        )
    return ClimateStub(gases)


def pulse_difference_kernel(
    stub: ClimateStub,
    gas: str,
    pulse_fraction: float = 0.5,
    horizon: int = 281,
    kernel_id: str | None = None,
) -> WarmingKernel:
    """Extract a kernel by perturbing the first period's emission.

    The stub runs once on the baseline path and once with the first period
    raised by ``pulse_fraction * baseline``; the temperature difference per
    unit of pulse mass is the kernel.
    """
    if not pulse_fraction > 0:
        raise KernelError("pulse_fraction must be positive")
    base = stub.baseline_path(gas, horizon)
    if base[0] == 0:
        raise KernelError(f"gas {gas!r} has zero baseline emission; pulse undefined")
    pulse = pulse_fraction * base[0]
    perturbed = base.copy()
    perturbed[0] += pulse
    diff = stub.simulate(gas, perturbed) - stub.simulate(gas, base)
    return WarmingKernel(kernel_id or gas, stub.gases[gas].unit, response=diff / pulse)


@dataclass(frozen=True)
class SequestrationSchedule:
    """Tons CO2 taken up per contract unit at contract ages 0, 1, 2, ..."""

    offsets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(float(x) for x in self.offsets))
        if any(x < 0 for x in self.offsets):
            raise KernelError("sequestration schedule entries must be >= 0")


def vintage_kernel(
    schedule: SequestrationSchedule,
    co2_kernel: WarmingKernel,
    contract_scale: float,
    kernel_id: str = "vintage",
    unit: str | None = None,
) -> WarmingKernel:
    """Warming of a multi-period sequestration contract.

    ``r[k] = -contract_scale * sum_{j<=k} N[j] * r_co2[k - j]``; the result has
    the CO2 kernel's length. ``contract_scale`` converts schedule units to the
    CO2 kernel's unit per contract unit.
    """
    if co2_kernel.response is None:
        raise KernelError("vintage convolution needs a time-invariant CO2 kernel")
    r_co2 = np.asarray(co2_kernel.response)
    n = np.asarray(schedule.offsets)
    if n.size == 0:
        r = np.zeros(len(r_co2))
    else:
        r = -contract_scale * np.convolve(n, r_co2)[: len(r_co2)]
    return WarmingKernel(kernel_id, unit or co2_kernel.unit, response=r)


def baseline_warming(
    initial_burdens: Mapping[str, float],
    kernels: Mapping[str, WarmingKernel],
    horizon: int,
) -> np.ndarray:
    """Warming from initial burdens, ``traj[t] = sum_p W[p, 0, t] * I_p``.

    ``kernels`` maps activity id to kernel. The array has ``horizon + 1``
    entries so that ``traj[t]`` is period ``t``; entry 0 is the period-0 state.
    """
    traj = np.zeros(horizon + 1)
    for activity, burden in initial_burdens.items():
        if burden == 0:
            continue
        if activity not in kernels:
            raise KernelError(f"no kernel for burdened activity {activity!r}")
        traj += burden * kernels[activity].matrix(0, horizon)[0]
    return traj


def warming_from_totals(
    totals: Mapping[tuple[str, int], float],
    kernels: Mapping[str, WarmingKernel],
    horizon: int,
) -> np.ndarray:
    """Warming added by activity volumes ``totals[(activity, u)]``, indexed like :func:`baseline_warming`."""
    traj = np.zeros(horizon + 1)
    by_activity: dict[str, dict[int, float]] = {}
    for (activity, u), volume in totals.items():
        if volume != 0:
            by_activity.setdefault(activity, {})[u] = volume
    for activity, vols in by_activity.items():
        if activity not in kernels:
            raise KernelError(f"no kernel for activity {activity!r}")
        kernel = kernels[activity]
        last_u = max(vols)
        w = kernel.matrix(last_u, horizon)
        for u, volume in vols.items():
            traj += volume * w[u]
    return traj


def temperature_trajectory(
    result,
    kernels: Mapping[str, WarmingKernel],
    burdens: Mapping[str, float],
    horizon: int,
) -> np.ndarray:
    """Baseline warming plus the warming of a clearing result's totals ``result.v``."""
    return baseline_warming(burdens, kernels, horizon) + warming_from_totals(result.v, kernels, horizon)


KERNEL_LAG_HEADER = ["kernel_id", "lag", "value_milliC_per_unit"]
KERNEL_TABLE_HEADER = ["kernel_id", "u", "t", "value"]


def write_kernels_csv(
    path: str | Path,
    kernels: Iterable[WarmingKernel],
    expand_to: tuple[int, int] | None = None,
) -> None:
    """Write kernels to CSV using the lag form, or the ``(u, t)`` form if any kernel is vintage.

    In the ``(u, t)`` form, time-invariant kernels are written out densely for
    ``u = 0..last_u`` and ``t <= last_t`` given by ``expand_to``, which is
    then required. Units are not part of the CSV; they live with the activity
    declarations.
    """
    kernels = list(kernels)
    vintage = any(k.table is not None for k in kernels)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not vintage:
            writer.writerow(KERNEL_LAG_HEADER)
            for k in kernels:
                for lag, value in enumerate(k.response):
                    writer.writerow([k.id, lag, repr(float(value))])
            return
        if expand_to is None and any(k.table is None for k in kernels):
            raise KernelError("mixing time-invariant and vintage kernels in one file needs expand_to=(last_u, last_t)")
        writer.writerow(KERNEL_TABLE_HEADER)
        for k in kernels:
            if k.table is not None:
                items = sorted(k.table.items())
            else:
                last_u, last_t = expand_to
                items = [((u, t), k.value(u, t)) for u in range(last_u + 1) for t in range(u, min(last_t, u + k.support - 1) + 1)]
            for (u, t), value in items:
                writer.writerow([k.id, u, t, repr(float(value))])


def read_kernels_csv(
    path: str | Path,
    units: Mapping[str, str],
    horizon: int | None = None,
) -> dict[str, WarmingKernel]:
    """Load kernels from CSV keyed by kernel id.

    ``units`` maps kernel id to the unit it is denominated in; kernels not
    listed there are skipped. Time-invariant
    rows must list lags 0..L contiguously. With ``horizon``, kernels are
    truncated (and warn per :func:`truncate_kernel`).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise KernelError(f"{path}: empty kernel file")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    lags: dict[str, dict[int, float]] = {}
    tables: dict[str, dict[tuple[int, int], float]] = {}
    try:
        if header == KERNEL_LAG_HEADER:
            for lineno, row in enumerate(body, start=2):
                kid, lag, value = row[0], int(row[1]), float(row[2])
                lags.setdefault(kid, {})[lag] = value
        elif header == KERNEL_TABLE_HEADER:
            for lineno, row in enumerate(body, start=2):
                kid, u, t, value = row[0], int(row[1]), int(row[2]), float(row[3])
                tables.setdefault(kid, {})[(u, t)] = value
        else:
            raise KernelError(f"{path}: unrecognised header {header}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, KernelError):
            raise
        raise KernelError(f"{path}, line {lineno}: malformed row ({exc})") from None

    out: dict[str, WarmingKernel] = {}
    for kid, entries in lags.items():
        if kid not in units:
            continue
        if sorted(entries) != list(range(len(entries))):
            raise KernelError(f"{path}: kernel {kid!r} lags are not contiguous from 0")
        out[kid] = WarmingKernel(kid, units[kid], response=[entries[k] for k in range(len(entries))])
    for kid, table in tables.items():
        if kid in units:
            out[kid] = WarmingKernel(kid, units[kid], table=table)
    if horizon is not None:
        out = {kid: truncate_kernel(k, horizon) for kid, k in out.items()}
    return out

