"""Scenario files, result CSVs and run manifests.

A scenario file is YAML that references a kernel CSV and a bid-book CSV by
path relative to itself::

    label: tiny1
    calendar: {start_year: 1, periods_per_year: 1, bid_through_year: 3, cap_through_year: 3}
    caps:
      first_constrained_year: 1
      value: 0.0                 # uniform cap (milli-degC); or `values: {period: cap}`
    burdens: {E: 0.0}
    activities:
      - {id: E, name: Emission, kind: emission, unit: Mt, kernel: dE}
    kernels: tiny1_kernels.csv
    bids: tiny1_bids.csv

All CSVs use ``.`` as decimal point, no thousands separators, and ``repr``
floats so that values survive a write/read cycle exactly. Lines starting with
``#`` are comments.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .auction import (
    Activity,
    AuctionConfig,
    CapSchedule,
    ClearingResult,
    ModelError,
    PriceTable,
    Status,
    price_table,
    revenue_eq6,
    revenue_net,
)
from .bids import BidError, read_bid_book, write_bid_book
from .kernels import KernelError, read_kernels_csv, write_kernels_csv
from .scenario import AuctionRun, Scenario, SweepRecord


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate; the message names the field and line."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(text: str) -> float:
    return float(text)


# -- scenario files ----------------------------------------------------------


def _to_python(node, path=(), lines=None):
    """Convert a composed YAML node tree to Python data, recording the line of every key path."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = yaml.safe_load(yaml.serialize(k))
            out[key] = _to_python(v, path + (key,), lines)
            lines[path + (key,)] = k.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


class _Doc:
    def __init__(self, path: Path):
        self.path = path
        text = path.read_text()
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path}: parse error: {exc}") from None
        if node is None:
            raise ScenarioError(f"{path}: empty scenario file")
        self.lines: dict[tuple, int] = {}
        self.data = _to_python(node, (), self.lines)

    def error(self, key_path: tuple, message: str) -> ScenarioError:
        line = None
        for n in range(len(key_path), -1, -1):
            if key_path[:n] in self.lines:
                line = self.lines[key_path[:n]]
                break
        name = ".".join(str(k) for k in key_path) or "<root>"
        return ScenarioError(f"{self.path}, line {line}: field '{name}': {message}")

    def get(self, *key_path, required=True, default=None):
        cur = self.data
        for i, k in enumerate(key_path):
            if not isinstance(cur, (dict, list)) or (isinstance(cur, dict) and k not in cur):
                if required:
                    raise self.error(key_path[:i], f"missing required key '{k}'")
                return default
            cur = cur[k]
        return cur


def scenario_inputs(path: str | Path) -> list[Path]:
    """The scenario file and the CSV files it references."""
    path = Path(path)
    doc = _Doc(path)
    return [path, path.parent / doc.get("kernels"), path.parent / doc.get("bids")]


def load_scenario(path: str | Path) -> Scenario:
    """Parse and fully validate a scenario file, including its kernel and bid CSVs."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"{path}: no such scenario file")
    doc = _Doc(path)
    cal = doc.get("calendar")
    try:
        start = float(doc.get("calendar", "start_year"))
        ppy = int(doc.get("calendar", "periods_per_year"))
    except (TypeError, ValueError):
        raise doc.error(("calendar",), "start_year and periods_per_year must be numbers") from None
    if ppy < 1:
        raise doc.error(("calendar", "periods_per_year"), "must be >= 1")

    def period_of(year, where):
        try:
            return int(round((float(year) - start) * ppy)) + 1
        except (TypeError, ValueError):
            raise doc.error(where, f"not a year: {year!r}") from None

    T_B = period_of(doc.get("calendar", "bid_through_year"), ("calendar", "bid_through_year"))
    T = period_of(doc.get("calendar", "cap_through_year"), ("calendar", "cap_through_year"))
    if not 1 <= T_B <= T:
        raise doc.error(("calendar",), f"need start <= bid_through_year <= cap_through_year (T_B={T_B}, T={T})")
    del cal

    Y = period_of(doc.get("caps", "first_constrained_year"), ("caps", "first_constrained_year"))
    if not 1 <= Y <= T:
        raise doc.error(("caps", "first_constrained_year"), f"period {Y} outside [1, {T}]")
    uniform = doc.get("caps", "value", required=False)
    explicit = doc.get("caps", "values", required=False, default={}) or {}
    caps: dict[int, float] = {}
    if uniform is not None:
        caps = {t: float(uniform) for t in range(Y, T + 1)}
    for t, c in explicit.items():
        if not isinstance(t, int):
            raise doc.error(("caps", "values", t), "cap periods must be integer period indices")
        try:
            caps[t] = float(c)
        except (TypeError, ValueError):
            raise doc.error(("caps", "values", t), f"not a number: {c!r}") from None
    missing = [t for t in range(Y, T + 1) if t not in caps]
    if missing:
        where = ("caps", "values") if explicit else ("caps",)
        raise doc.error(where, f"no cap for period(s) {missing[:5]} in [Y={Y}, T={T}]")
    try:
        schedule = CapSchedule(Y, T, caps)
    except ModelError as exc:
        raise doc.error(("caps",), str(exc)) from None

    activities = []
    for i, raw in enumerate(doc.get("activities")):
        for key in ("id", "kind", "unit", "kernel"):
            if key not in raw:
                raise doc.error(("activities", i), f"missing required key '{key}'")
        try:
            activities.append(Activity(str(raw["id"]), str(raw.get("name", raw["id"])), raw["kind"], str(raw["unit"]), str(raw["kernel"])))
        except ValueError:
            raise doc.error(("activities", i, "kind"), f"kind must be emission or sequestration, got {raw['kind']!r}") from None

    units = {}
    for i, a in enumerate(activities):
        if a.kernel_id in units and units[a.kernel_id] != a.unit:
            raise doc.error(("activities", i, "unit"), f"kernel {a.kernel_id!r} is shared by activities with different units")
        units[a.kernel_id] = a.unit
    kpath = path.parent / doc.get("kernels")
    if not kpath.exists():
        raise doc.error(("kernels",), f"kernel file {kpath} does not exist (needed for kernels {sorted(units)})")
    try:
        kernels = read_kernels_csv(kpath, units, horizon=T + 1)
    except KernelError as exc:
        raise doc.error(("kernels",), str(exc)) from None
    for i, a in enumerate(activities):
        if a.kernel_id not in kernels:
            raise doc.error(("activities", i, "kernel"), f"dangling reference: kernel {a.kernel_id!r} not found in {kpath.name}")

    bpath = path.parent / doc.get("bids")
    if not bpath.exists():
        raise doc.error(("bids",), f"bid file {bpath} does not exist")
    try:
        bids = read_bid_book(bpath)
    except BidError as exc:
        raise doc.error(("bids",), str(exc)) from None

    burdens_raw = doc.get("burdens", required=False, default={}) or {}
    burdens = {}
    for k, v in burdens_raw.items():
        try:
            burdens[str(k)] = float(v)
        except (TypeError, ValueError):
            raise doc.error(("burdens", k), f"not a number: {v!r}") from None
    try:
        config = AuctionConfig(start, ppy, T_B, T, schedule, burdens)
    except ModelError as exc:
        raise doc.error(("calendar",), str(exc)) from None
    scenario = Scenario(config, tuple(activities), kernels, tuple(bids), str(doc.get("label", required=False, default=path.stem)))
    try:
        scenario.model()
    except ModelError as exc:
        raise doc.error(("bids",) if "bid" in str(exc) else (), str(exc)) from None
    return scenario


def save_scenario(s: Scenario, directory: str | Path, name: str | None = None) -> Path:
    """Write ``<name>.scenario`` with its kernel and bid CSVs; returns the scenario path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = name or s.label or "scenario"
    cfg = s.config
    caps = cfg.cap_schedule
    values = [caps.caps[t] for t in range(caps.Y, caps.T + 1)]
    cap_block: dict = {"first_constrained_year": cfg.label(caps.Y)}
    if len(set(values)) == 1:
        cap_block["value"] = values[0]
    else:
        cap_block["values"] = {t: caps.caps[t] for t in range(caps.Y, caps.T + 1)}
    doc = {
        "label": s.label,
        "calendar": {
            "start_year": cfg.start_period,
            "periods_per_year": cfg.periods_per_year,
            "bid_through_year": cfg.label(cfg.T_B),
            "cap_through_year": cfg.label(cfg.T),
        },
        "caps": cap_block,
        "burdens": dict(cfg.initial_burdens),
        "activities": [
            {"id": a.id, "name": a.name, "kind": a.kind.value, "unit": a.unit, "kernel": a.kernel_id}
            for a in s.activities
        ],
        "kernels": f"{name}_kernels.csv",
        "bids": f"{name}_bids.csv",
    }
    used = sorted({a.kernel_id for a in s.activities})
    write_kernels_csv(directory / doc["kernels"], [s.kernels[k] for k in used], expand_to=(cfg.T_B, cfg.T))
    write_bid_book(directory / doc["bids"], s.bids)
    out = directory / f"{name}.scenario"
    with open(out, "w") as fh:
        fh.write(f"# scenario '{s.label}': {len(s.activities)} activities, {len(s.bids)} bids\n")
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None, width=100)
    return out


# -- results -----------------------------------------------------------------

PRICE_COMMENT = (
    "# prices in money per activity unit; display_sign={flag} "
    "(0: canonical, emissions >= 0 and sequestration <= 0; 1: all prices negated)"
)
SWEEP_HEADER = ["Y", "status", "objective", "revenue_net", "revenue_eq6"]


def _strict_rows(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row and not row[0].startswith("#")]


def write_price_table(path: str | Path, table: PriceTable, labels: Sequence[float] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(PRICE_COMMENT.format(flag=int(table.display_sign)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "label", *table.activities])
        for i, (t, row) in enumerate(zip(table.periods, table.values)):
            label = labels[i] if labels is not None else t
            w.writerow([t, _fmt(label), *(_fmt(x) for x in row)])


def read_price_table(path: str | Path) -> PriceTable:
    path = Path(path)
    with open(path) as fh:
        first = fh.readline()
    if "display_sign=" not in first:
        raise ScenarioError(f"{path}: missing display_sign header comment")
    flag = first.split("display_sign=")[1][0] == "1"
    rows = _strict_rows(path)
    header, body = rows[0], rows[1:]
    if header[:2] != ["period", "label"]:
        raise ScenarioError(f"{path}: expected 'period,label,...' header")
    periods = tuple(int(r[0]) for r in body)
    values = tuple(tuple(_parse_float(x) for x in r[2:]) for r in body)
    return PriceTable(periods, tuple(header[2:]), values, flag)


def write_sweep_csv(path: str | Path, records: Iterable[SweepRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in records:
            money = [r.objective, r.revenue_net, r.revenue_eq6]
            w.writerow([_fmt(r.Y), r.status.value, *("" if x is None else _fmt(x) for x in money)])


def read_sweep_csv(path: str | Path) -> list[SweepRecord]:
    rows = _strict_rows(Path(path))
    if rows[0] != SWEEP_HEADER:
        raise ScenarioError(f"{path}: expected header {','.join(SWEEP_HEADER)}")
    out = []
    for r in rows[1:]:
        money = [None if x == "" else _parse_float(x) for x in r[2:5]]
        out.append(SweepRecord(_parse_float(r[0]), Status(r[1]), *money))
    return out


def write_sweep_trajectories(path: str | Path, records: Iterable[SweepRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Y", "t", "milliC"])
        for r in records:
            if r.trajectory is None:
                continue
            for t, x in enumerate(r.trajectory):
                if t >= 1:
                    w.writerow([_fmt(r.Y), t, _fmt(x)])


def read_stored_result(out_dir: str | Path) -> ClearingResult:
    """Rebuild an optimal ClearingResult from ``allocations.csv``, ``prices.csv`` and ``cap_duals.csv``."""
    out_dir = Path(out_dir)
    q = {}
    for r in _strict_rows(out_dir / "allocations.csv")[1:]:
        q[(r[0], r[1], int(r[2]))] = _parse_float(r[3])
    table = read_price_table(out_dir / "prices.csv")
    sign = -1.0 if table.display_sign else 1.0
    prices = {}
    for t, row in zip(table.periods, table.values):
        for p, x in zip(table.activities, row):
            prices[(p, t)] = sign * x + 0.0
    v = {k: 0.0 for k in prices}
    for (a, p, t), qty in q.items():
        v[(p, t)] = v.get((p, t), 0.0) + qty
    duals = {int(r[0]): _parse_float(r[2]) for r in _strict_rows(out_dir / "cap_duals.csv")[1:]}
    summary = json.loads((out_dir / "summary.json").read_text())
    return ClearingResult(Status(summary["status"]), q, v, prices, duals, summary.get("objective"))


@dataclass
class RunManifest:
    scenario_path: str
    command: str
    overrides: dict = field(default_factory=dict)
    tool_version: str = __version__
    input_hashes: dict[str, str] = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    solve_seconds: dict[str, float] = field(default_factory=dict)

    @classmethod
    def for_inputs(cls, scenario_path, command, overrides, inputs: Iterable[Path], started: str) -> RunManifest:
        hashes = {str(p): hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in inputs}
        return cls(str(scenario_path), command, dict(overrides), __version__, hashes, started)

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def emit_results(
    out_dir: str | Path,
    run: AuctionRun | None = None,
    sweep: Sequence[SweepRecord] | None = None,
    config: AuctionConfig | None = None,
    display_sign: bool = False,
    manifest: RunManifest | None = None,
) -> list[Path]:
    """Write the CSV/JSON outputs of a clear and/or a sweep into ``out_dir``.

    A clear produces ``summary.json`` and, when optimal, ``prices.csv``,
    ``allocations.csv``, ``cap_duals.csv``, ``acceptance.csv`` and
    ``trajectory.csv``. A sweep produces ``sweep.csv`` and
    ``sweep_trajectories.csv``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ScenarioError(f"cannot create output directory {out}: {exc}") from None
    written: list[Path] = []
    if run is not None:
        written += _emit_run(out, run, config or run.model.config, display_sign)
    if sweep is not None:
        write_sweep_csv(out / "sweep.csv", sweep)
        write_sweep_trajectories(out / "sweep_trajectories.csv", sweep)
        written += [out / "sweep.csv", out / "sweep_trajectories.csv"]
    if manifest is not None:
        written.append(manifest.write(out))
    return written


def _emit_run(out: Path, run: AuctionRun, cfg: AuctionConfig, display_sign: bool) -> list[Path]:
    r, m = run.result, run.model
    summary = {"status": r.status.value, "objective": r.objective, "violated_periods": list(r.violated_periods)}
    paths = [out / "summary.json"]
    if r.optimal:
        summary.update(
            revenue_net=revenue_net(r),
            revenue_eq6=revenue_eq6(r, m.bids),
            certificate={name: c.ok for name, c in run.certificate.conditions.items()},
            certificate_passed=run.certificate.passed,
        )
        periods = list(range(1, cfg.T_B + 1))
        acts = [a.id for a in m.activities]
        table = price_table(r, periods, acts, display_sign)
        write_price_table(out / "prices.csv", table, [cfg.label(t) for t in periods])
        with open(out / "allocations.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["agent", "activity", "period", "q"])
            for key in sorted(r.q):
                w.writerow([*key, _fmt(r.q[key])])
        with open(out / "cap_duals.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["period", "label", "omega"])
            for t in sorted(r.cap_duals):
                w.writerow([t, _fmt(cfg.label(t)), _fmt(r.cap_duals[t])])
        with open(out / "acceptance.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["activity", "period", "fraction"])
            for (p, t), x in run.allocation.items():
                w.writerow([p, t, _fmt(x)])
        with open(out / "trajectory.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["period", "label", "milliC", "cap"])
            for t in range(1, cfg.T + 1):
                cap = m.cap(t)
                w.writerow([t, _fmt(cfg.label(t)), _fmt(run.trajectory[t]), "" if math.isinf(cap) else _fmt(cap)])
        paths += [out / n for n in ("prices.csv", "allocations.csv", "cap_duals.csv", "acceptance.csv", "trajectory.csv")]
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return paths


__all__ = [
    "RunManifest",
    "ScenarioError",
    "emit_results",
    "load_scenario",
    "read_price_table",
    "read_stored_result",
    "read_sweep_csv",
    "save_scenario",
    "scenario_inputs",
    "write_price_table",
    "write_sweep_csv",
]
