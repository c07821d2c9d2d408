"""Network, bid and time-series types for the distribution market."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

HORIZON = 24
INTERFACE_BUS = 0
#: Stand-in capacity for lines without a meaningful flow limit (MW).
UNLIMITED_MW = 1e6


class ValidationError(ValueError):
    """Raised when an input record violates a model invariant."""


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    capacity: float = UNLIMITED_MW

    def __post_init__(self):
        if not (self.capacity > 0 and math.isfinite(self.capacity)):
            raise ValidationError(f"line {self.id}: capacity must be positive and finite, got {self.capacity}")
        if self.from_bus == self.to_bus:
            raise ValidationError(f"line {self.id}: from_bus and to_bus are both {self.from_bus}")
        if min(self.from_bus, self.to_bus) < 0:
            raise ValidationError(f"line {self.id}: bus ids must be non-negative")


@dataclass(frozen=True)
class Network:
    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    interface_bus: int = INTERFACE_BUS

    def __post_init__(self):
        if any(b < 0 for b in self.buses):
            raise ValidationError("bus ids must be non-negative")
        object.__setattr__(self, "buses", tuple(sorted(set(self.buses))))
        object.__setattr__(self, "lines", tuple(self.lines))

    def bus_index(self) -> dict[int, int]:
        return {b: k for k, b in enumerate(self.buses)}

    def graph(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.buses)
        g.add_edges_from((ln.from_bus, ln.to_bus, ln.id) for ln in self.lines)
        return g

    def line(self, line_id: int) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(line_id)

    def downstream(self, line: Line) -> set[int]:
        """Buses cut off from the interface bus when ``line`` is removed."""
        g = self.graph()
        g.remove_edge(line.from_bus, line.to_bus, key=line.id)
        reach = nx.node_connected_component(g, self.interface_bus)
        return set(self.buses) - reach


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_network(network: Network) -> ValidationReport:
    report = ValidationReport()
    buses = set(network.buses)
    if network.interface_bus != INTERFACE_BUS:
        report.errors.append(f"interface bus must be {INTERFACE_BUS}, got {network.interface_bus}")
    if INTERFACE_BUS not in buses:
        report.errors.append(f"interface bus {INTERFACE_BUS} missing")
    seen = set()
    for ln in network.lines:
        if ln.id in seen:
            report.errors.append(f"duplicate line id {ln.id}")
        seen.add(ln.id)
        for end in (ln.from_bus, ln.to_bus):
            if end not in buses:
                report.errors.append(f"line {ln.id}: dangling endpoint {end} (undeclared bus)")
    if report.errors or not buses:
        return report

    g = network.graph()
    if not nx.is_connected(g):
        parts = sorted(sorted(c) for c in nx.connected_components(g))
        report.errors.append(f"disconnected network, components {parts}")
    elif not nx.is_tree(g):
        report.warnings.append("network is not a tree (non-radial feeder)")
    return report


def incidence(network: Network) -> np.ndarray:
    """Bus-line incidence matrix, shape ``(n_buses, n_lines)``.

    Rows follow ``network.buses``, columns ``network.lines``.  A line from
    ``i`` to ``j`` has +1 at ``j`` and -1 at ``i``, so ``a @ flow`` is the net
    inflow into each bus.
    """
    index = network.bus_index()
    a = np.zeros((len(network.buses), len(network.lines)))
    for col, ln in enumerate(network.lines):
        a[index[ln.to_bus], col] = 1.0
        a[index[ln.from_bus], col] = -1.0
    return a


@dataclass(frozen=True)
class BidSegment:
    benefit: float
    capacity: float

    def __post_init__(self):
        if not math.isfinite(self.benefit):
            raise ValidationError(f"segment benefit must be finite, got {self.benefit}")
        if not (self.capacity >= 0 and math.isfinite(self.capacity)):
            raise ValidationError(f"segment capacity must be finite and >= 0, got {self.capacity}")


@dataclass(frozen=True)
class CustomerBid:
    """Stepwise demand bid; segments must be ordered by non-increasing benefit."""

    bus: int
    segments: tuple[BidSegment, ...]

    def __post_init__(self):
        segs = tuple(s if isinstance(s, BidSegment) else BidSegment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        for a, b in zip(segs, segs[1:]):
            if b.benefit > a.benefit:
                raise ValidationError(
                    f"bid at bus {self.bus}: segments not non-increasing in benefit "
                    f"({[s.benefit for s in segs]})"
                )

    @property
    def capacity(self) -> float:
        return sum(s.capacity for s in self.segments)


def _series(values: Iterable[float], horizon: int, what: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) != horizon:
        raise ValidationError(f"{what}: expected {horizon} hourly entries, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise ValidationError(f"{what}: entries must be finite")
    return out


@dataclass(frozen=True)
class FixedLoadSeries:
    """Inelastic demand per bus per hour (MW).  Buses not listed carry none."""

    loads: Mapping[int, tuple[float, ...]]
    horizon: int = HORIZON

    def __post_init__(self):
        clean = {}
        for bus, values in sorted(self.loads.items()):
            series = _series(values, self.horizon, f"fixed load at bus {bus}")
            if any(v < 0 for v in series):
                raise ValidationError(f"fixed load at bus {bus}: entries must be >= 0")
            clean[int(bus)] = series
        object.__setattr__(self, "loads", clean)

    def at(self, bus: int, hour: int) -> float:
        series = self.loads.get(bus)
        return series[hour] if series else 0.0

    def total(self, hour: int) -> float:
        return sum(s[hour] for s in self.loads.values())

    @classmethod
    def zeros(cls, horizon: int = HORIZON) -> "FixedLoadSeries":
        return cls({}, horizon)


@dataclass(frozen=True)
class TlmpSeries:
    prices: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "prices", _series(self.prices, len(self.prices), "T-LMP series"))

    @property
    def horizon(self) -> int:
        return len(self.prices)

    @classmethod
    def constant(cls, price: float, horizon: int = HORIZON) -> "TlmpSeries":
        return cls((price,) * horizon)


@dataclass(frozen=True)
class AssignedPowerSeries:
    power: tuple[float, ...]
    allow_negative: bool = False

    def __post_init__(self):
        values = _series(self.power, len(self.power), "assigned power series")
        if not self.allow_negative and any(v < 0 for v in values):
            raise ValidationError("assigned power series: negative entries need allow_negative=True")
        object.__setattr__(self, "power", values)

    @property
    def horizon(self) -> int:
        return len(self.power)

    @classmethod
    def constant(cls, power: float, horizon: int = HORIZON) -> "AssignedPowerSeries":
        return cls((power,) * horizon, allow_negative=power < 0)


@dataclass(frozen=True)
class AggregatedBid:
    hour: int
    steps: tuple[tuple[float, float], ...]
    inelastic_block: float

    @property
    def elastic_capacity(self) -> float:
        return sum(q for _, q in self.steps)


def aggregate_bid(bids: Sequence[CustomerBid], fixed: FixedLoadSeries, hour: int) -> AggregatedBid:
    """Merge every customer's segments into one merit-ordered demand curve."""
    merged: dict[float, float] = {}
    for bid in bids:
        for seg in bid.segments:
            merged[seg.benefit] = merged.get(seg.benefit, 0.0) + seg.capacity
    steps = tuple(sorted(merged.items(), key=lambda kv: -kv[0]))
    return AggregatedBid(hour, steps, fixed.total(hour))
