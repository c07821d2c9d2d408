"""Input file schemas and result emission.

Network and bid files are TOML; hourly series are CSV with a header row.

network.toml::

    interface_bus = 0
    buses = [0, 1, 2]

    [[lines]]
    id = 0
    from = 0
    to = 1
    capacity = 12.0        # MW, omit for unlimited

bids.toml::

    [[bids]]
    bus = 1
    segments = [[50.0, 2.5], [40.0, 2.5]]   # [benefit $/MWh, capacity MW]

fixed.csv (``hour,bus,demand_mw``), tlmp.csv (``hour,price``) and
assigned.csv (``hour,power_mw``) use hours 0..23.
"""

from __future__ import annotations

import csv
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .clearing import ClearingInput, ClearingResult
from .lp import LpProblem, SolverOptions
from .model import (
    HORIZON,
    UNLIMITED_MW,
    AssignedPowerSeries,
    BidSegment,
    CustomerBid,
    FixedLoadSeries,
    Line,
    Network,
    TlmpSeries,
    ValidationError,
    validate_network,
)
from .settlement import SettlementReport


class InputError(ValidationError):
    def __init__(self, path, message: str, line: int | None = None, field: str | None = None):
        self.path = str(path)
        self.line = line
        self.field = field
        where = self.path + (f":{line}" if line is not None else "")
        what = f" [{field}]" if field else ""
        super().__init__(f"{where}{what}: {message}")


def read_toml(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise InputError(path, "file not found")
    try:
        return tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise InputError(path, f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from None


def _table_lines(path: Path, header: str) -> list[int]:
    """1-based line numbers of each ``[[header]]`` table in a TOML file."""
    pattern = re.compile(rf"^\s*\[\[\s*{re.escape(header)}\s*\]\]")
    return [k + 1 for k, text in enumerate(path.read_text().splitlines()) if pattern.match(text)]


def _number(value, path, line, field_name, *, allow_inf=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(path, f"expected a number, got {value!r}", line, field_name)
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise InputError(path, f"expected a finite number, got {value!r}", line, field_name)
    return value


def load_network(path) -> Network:
    path = Path(path)
    data = read_toml(path)
    starts = _table_lines(path, "lines")
    try:
        buses = tuple(int(b) for b in data["buses"])
    except KeyError:
        raise InputError(path, "missing key", None, "buses") from None
    except (TypeError, ValueError):
        raise InputError(path, "buses must be a list of integers", None, "buses") from None
    lines = []
    for k, rec in enumerate(data.get("lines", [])):
        line = starts[k] if k < len(starts) else None
        for key in ("id", "from", "to"):
            if key not in rec:
                raise InputError(path, f"missing key in {rec}", line, f"lines[{k}].{key}")
            if not isinstance(rec[key], int) or isinstance(rec[key], bool):
                raise InputError(path, f"expected an integer, got {rec[key]!r}", line, f"lines[{k}].{key}")
        cap = _number(rec.get("capacity", UNLIMITED_MW), path, line, f"lines[{k}].capacity")
        try:
            lines.append(Line(rec["id"], rec["from"], rec["to"], cap))
        except ValidationError as exc:
            raise InputError(path, f"{exc} (record {rec})", line, f"lines[{k}]") from None
    interface = data.get("interface_bus", 0)
    net = Network(buses, tuple(lines), interface)
    report = validate_network(net)
    if not report.ok:
        raise InputError(path, "; ".join(report.errors))
    return net


def load_bids(path) -> tuple[CustomerBid, ...]:
    path = Path(path)
    data = read_toml(path)
    starts = _table_lines(path, "bids")
    bids = []
    for k, rec in enumerate(data.get("bids", [])):
        line = starts[k] if k < len(starts) else None
        if "bus" not in rec or not isinstance(rec["bus"], int):
            raise InputError(path, f"bid needs an integer bus (record {rec})", line, f"bids[{k}].bus")
        segments = []
        for g, seg in enumerate(rec.get("segments", [])):
            name = f"bids[{k}].segments[{g}]"
            if not isinstance(seg, list) or len(seg) != 2:
                raise InputError(path, f"segment must be [benefit, capacity], got {seg!r}", line, name)
            try:
                segments.append(BidSegment(_number(seg[0], path, line, name), _number(seg[1], path, line, name)))
            except ValidationError as exc:
                if isinstance(exc, InputError):
                    raise
                raise InputError(path, str(exc), line, name) from None
        try:
            bids.append(CustomerBid(rec["bus"], tuple(segments)))
        except ValidationError as exc:
            raise InputError(path, f"{exc}; record {rec}", line, f"bids[{k}].segments") from None
    return tuple(bids)


def _read_csv(path, columns: tuple[str, ...]) -> list[tuple[int, dict]]:
    path = Path(path)
    if not path.is_file():
        raise InputError(path, "file not found")
    with path.open(newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.lstrip().startswith("#"))
        header = tuple(h.strip() for h in reader.fieldnames or ())
        if header[: len(columns)] != columns:
            raise InputError(path, f"expected header {','.join(columns)}, got {','.join(header)}", 1)
        rows = []
        for row in reader:
            rows.append((reader.line_num, {k.strip(): (v or "").strip() for k, v in row.items() if k}))
    return rows


def _csv_float(text: str, path, line, name) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(path, f"not a number: {text!r}", line, name) from None
    if not math.isfinite(value):
        raise InputError(path, f"expected a finite number, got {text!r}", line, name)
    return value


def _csv_hour(text: str, path, line) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(path, f"hour must be an integer, got {text!r}", line, "hour") from None


def _load_hourly(path, value_column: str, horizon: int) -> tuple[float, ...]:
    rows = _read_csv(path, ("hour", value_column))
    if len(rows) != horizon:
        raise InputError(path, f"expected {horizon} hourly entries, got {len(rows)}")
    values = []
    for k, (line, row) in enumerate(rows):
        if _csv_hour(row["hour"], path, line) != k:
            raise InputError(path, f"hours must run 0..{horizon - 1} in order", line, "hour")
        values.append(_csv_float(row[value_column], path, line, value_column))
    return tuple(values)


def load_tlmp(path, horizon: int = HORIZON) -> TlmpSeries:
    return TlmpSeries(_load_hourly(path, "price", horizon))


def load_assigned(path, horizon: int = HORIZON, allow_negative: bool = False) -> AssignedPowerSeries:
    values = _load_hourly(path, "power_mw", horizon)
    if not allow_negative:
        for k, v in enumerate(values):
            if v < 0:
                raise InputError(path, f"negative assigned power {v} (use allow_negative)", k + 2, "power_mw")
    return AssignedPowerSeries(values, allow_negative=allow_negative)


def load_fixed(path, horizon: int = HORIZON) -> FixedLoadSeries:
    rows = _read_csv(path, ("hour", "bus", "demand_mw"))
    loads: dict[int, list[float]] = {}
    for line, row in rows:
        hour = _csv_hour(row["hour"], path, line)
        try:
            bus = int(row["bus"])
        except ValueError:
            raise InputError(path, f"bus must be an integer, got {row['bus']!r}", line, "bus") from None
        value = _csv_float(row["demand_mw"], path, line, "demand_mw")
        if value < 0:
            raise InputError(path, f"fixed load must be >= 0, got {value}", line, "demand_mw")
        if not 0 <= hour < horizon:
            raise InputError(path, f"hour {hour} outside 0..{horizon - 1}", line, "hour")
        series = loads.setdefault(bus, [math.nan] * horizon)
        if not math.isnan(series[hour]):
            raise InputError(path, f"duplicate entry for bus {bus} hour {hour}", line)
        series[hour] = value
    for bus, series in loads.items():
        missing = [h for h, v in enumerate(series) if math.isnan(v)]
        if missing:
            raise InputError(path, f"bus {bus}: expected {horizon} hourly entries, missing hours {missing}")
    return FixedLoadSeries({b: tuple(s) for b, s in loads.items()}, horizon)


@dataclass(frozen=True)
class RunConfig:
    network: Path
    bids: Path | None = None
    tlmp: Path | None = None
    fixed: Path | None = None
    assigned: Path | None = None
    mu: float = 0.0
    tlmp_scale: float = 1.0
    lambda_enabled: bool = True
    basis: str = "actual"
    out_dir: Path = Path("results")
    allow_negative_assigned: bool = False
    horizon: int = HORIZON
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValidationError(f"mu must be finite and >= 0, got {self.mu}")
        if not (math.isfinite(self.tlmp_scale) and self.tlmp_scale >= 0):
            raise ValidationError(f"tlmp scale must be finite and >= 0, got {self.tlmp_scale}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if self.basis not in ("actual", "assigned"):
            raise ValidationError(f"basis must be 'actual' or 'assigned', got {self.basis!r}")

    def solver_options(self) -> SolverOptions:
        return SolverOptions(**self.solver)


def load_inputs(config: RunConfig) -> ClearingInput:
    net = load_network(config.network)
    bids = load_bids(config.bids) if config.bids else ()
    if config.tlmp is None:
        raise InputError("<config>", "a T-LMP file is required", field="tlmp")
    tlmp = load_tlmp(config.tlmp, config.horizon)
    fixed = load_fixed(config.fixed, tlmp.horizon) if config.fixed else FixedLoadSeries.zeros(tlmp.horizon)
    if config.assigned:
        assigned = load_assigned(config.assigned, tlmp.horizon, config.allow_negative_assigned)
    else:
        assigned = AssignedPowerSeries.constant(0.0, tlmp.horizon)
    buses = set(net.buses)
    for bid in bids:
        if bid.bus not in buses:
            raise InputError(config.bids, f"bid at undeclared bus {bid.bus}", field="bus")
    for bus in fixed.loads:
        if bus not in buses:
            raise InputError(config.fixed, f"fixed load at undeclared bus {bus}", field="bus")
    return ClearingInput(
        network=net,
        bids=bids,
        fixed=fixed,
        tlmp=tlmp,
        assigned=assigned,
        mu=config.mu,
        tlmp_scale=config.tlmp_scale,
        lambda_enabled=config.lambda_enabled,
    )


# writing


def fmt(x: float) -> str:
    text = f"{x:.6f}"
    return "0.000000" if text == "-0.000000" else text


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_network(net: Network, path, comment: str = "") -> None:
    data = {
        "interface_bus": net.interface_bus,
        "buses": list(net.buses),
        "lines": [{"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "capacity": ln.capacity} for ln in net.lines],
    }
    Path(path).write_text(_comment(comment) + tomli_w.dumps(data))


def write_bids(bids, path, comment: str = "") -> None:
    data = {"bids": [{"bus": b.bus, "segments": [[s.benefit, s.capacity] for s in b.segments]} for b in bids]}
    Path(path).write_text(_comment(comment) + tomli_w.dumps(data))


def _comment(text: str) -> str:
    return "".join(f"# {line}\n" for line in text.splitlines()) + ("\n" if text else "")


def write_series(inp: ClearingInput, out_dir) -> None:
    out = Path(out_dir)
    _write_csv(out / "tlmp.csv", ("hour", "price"), ((t, repr(p)) for t, p in enumerate(inp.tlmp.prices)))
    _write_csv(out / "assigned.csv", ("hour", "power_mw"), ((t, repr(p)) for t, p in enumerate(inp.assigned.power)))
    _write_csv(
        out / "fixed.csv",
        ("hour", "bus", "demand_mw"),
        ((t, bus, repr(series[t])) for bus, series in inp.fixed.loads.items() for t in range(inp.fixed.horizon)),
    )


def write_inputs(inp: ClearingInput, out_dir, notes: str = "") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_network(inp.network, out / "network.toml", notes)
    write_bids(inp.bids, out / "bids.toml", notes)
    write_series(inp, out)
    return {name: out / f"{name}.{ext}" for name, ext in (
        ("network", "toml"), ("bids", "toml"), ("fixed", "csv"), ("tlmp", "csv"), ("assigned", "csv"))}


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def emit_results(result: ClearingResult, report: SettlementReport, out_dir) -> list[Path]:
    out = _prepare(out_dir)
    buses = result.buses
    clearing_rows = [
        (h.hour, bus, fmt(h.load[k]), fmt(h.dlmp[k]), fmt(h.p_main), fmt(h.deviation))
        for h in result.hours
        for k, bus in enumerate(buses)
    ]
    _write_csv(out / "clearing.csv", ("hour", "bus", "load_mw", "dlmp", "p_main_mw", "deviation_mw"), clearing_rows)

    lines = result.input.network.lines
    flow_rows = [
        (h.hour, ln.id, ln.from_bus, ln.to_bus, fmt(h.flow[k])) for h in result.hours for k, ln in enumerate(lines)
    ]
    _write_csv(out / "flows.csv", ("hour", "line", "from_bus", "to_bus", "flow_mw"), flow_rows)

    per_bus = report.per_bus
    settle_rows = [(bus, fmt(per_bus[k])) for k, bus in enumerate(buses)]
    settle_rows += [("C_c", fmt(report.customer_total)), ("C_u", fmt(report.utility_payment)),
                    ("C_delta", fmt(report.surplus))]
    _write_csv(out / "settlement.csv", ("bus", "payment"), settle_rows)
    return [out / "clearing.csv", out / "flows.csv", out / "settlement.csv"]


def emit_sweep(sweep, out_dir) -> Path:
    """One row per sweep value: per-bus daily-average prices, then totals."""
    out = _prepare(out_dir)
    header = [sweep.parameter] + [f"avg_dlmp_bus{b}" for b in sweep.buses] + [
        "total_abs_deviation_mwh", "total_import_mwh", "C_c", "C_u", "deficit"]
    rows = [
        [fmt(r.value)] + [fmt(v) for v in r.avg_dlmp]
        + [fmt(r.total_abs_deviation), fmt(r.total_import), fmt(r.customer_total), fmt(r.utility_payment), fmt(r.surplus)]
        for r in sweep.rows
    ]
    _write_csv(out / "sweep.csv", header, rows)
    return out / "sweep.csv"


def write_solution(result: ClearingResult, problems: list[LpProblem], solutions, path) -> Path:
    """Save each hour's LP with its primal/dual pair for later re-verification."""
    payload = {
        "hours": [
            {"hour": h.hour, "lp": p.to_dict(), "primal": s.primal.tolist(), "duals": s.duals.tolist()}
            for h, p, s in zip(result.hours, problems, solutions)
        ]
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=1))
    return path


def read_solution(path) -> list[tuple[int, LpProblem, np.ndarray, np.ndarray]]:
    path = Path(path)
    if not path.is_file():
        raise InputError(path, "file not found")
    try:
        data = json.loads(path.read_text())
        return [
            (int(h["hour"]), LpProblem.from_dict(h["lp"]), np.array(h["primal"], float), np.array(h["duals"], float))
            for h in data["hours"]
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(path, f"malformed solution file: {exc}") from None
