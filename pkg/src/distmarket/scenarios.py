"""IEEE 13-bus fixture and the three case-study parameter sweeps.

Bus labels
----------
The fixture uses internal ids 0-12 with the feeder head as bus 0; the
published labels run 1-13, so ``label = id + 1``.  The mapping onto the
IEEE 13-node feeder names is::

    label  id  IEEE node      label  id  IEEE node
      1     0    650            8     7    671
      2     1    633            9     8    611
      3     2    632           10     9    652
      4     3    645           11    10    692
      5     4    646           12    11    675
      6     5    680           13    12    634
      7     6    684

Lines 3-8 (632-671) and 4-5 (645-646) carry reduced limits; line 3-8 feeds
the subtree holding labels 6-12.  Benefit ladders, fixed loads, the reduced
limits and the T-LMP day profile are illustrative defaults, not measured
data.  "Maximum 10 MW" per customer is read as 10 MW in total over its four
segments (2.5 MW each).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .clearing import ClearingInput, ClearingResult, clear, grid_following
from .lp import SolverOptions
from .model import (
    HORIZON,
    UNLIMITED_MW,
    AssignedPowerSeries,
    CustomerBid,
    FixedLoadSeries,
    Line,
    Network,
    TlmpSeries,
    ValidationError,
)
from .settlement import settle

IEEE_NODES = {
    1: "650", 2: "633", 3: "632", 4: "645", 5: "646", 6: "680", 7: "684",
    8: "671", 9: "611", 10: "652", 11: "692", 12: "675", 13: "634",
}

# (from, to) in published labels, feeder head first
FEEDER_LINES = (
    (1, 3), (3, 2), (2, 13), (3, 4), (4, 5), (3, 8),
    (8, 6), (8, 7), (7, 9), (7, 10), (8, 11), (11, 12),
)

CASE1_SCALES = tuple(round(0.2 * k, 10) for k in range(1, 21))
CASE2_MUS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 100.0, 1e3, 1e4, 1e5, 1e6)
CASE3_SCALES = tuple(round(0.1 * k, 10) for k in range(1, 10))


def to_label(bus: int) -> int:
    return bus + 1


def from_label(label: int) -> int:
    return label - 1


@dataclass(frozen=True)
class FixtureConfig:
    microgrid_labels: tuple[int, ...] = (2, 3, 5, 6, 7, 10, 11, 12, 13)
    segments: int = 4
    customer_capacity: float = 10.0
    benefit_ladder: tuple[float, ...] = (61.3, 47.9, 36.7, 28.4)
    # added to the ladder per microgrid, in listing order, so buses do not tie
    benefit_offset: float = 1.37
    reduced_caps: dict = field(default_factory=lambda: {"3-8": 23.7, "4-5": 6.1})
    # IEEE 13-node spot loads in MW, keyed by label
    fixed_loads: dict = field(default_factory=lambda: {
        "13": 0.4, "4": 0.17, "5": 0.23, "10": 0.128, "8": 1.155, "12": 0.843, "11": 0.17, "9": 0.17,
    })
    load_shape: tuple[float, ...] = (
        0.62, 0.58, 0.56, 0.55, 0.57, 0.63, 0.72, 0.81, 0.87, 0.90, 0.92, 0.94,
        0.95, 0.96, 0.97, 0.98, 1.00, 0.99, 0.96, 0.92, 0.86, 0.78, 0.70, 0.65,
    )
    tlmp: tuple[float, ...] = (
        24.3, 22.8, 21.9, 21.5, 22.4, 25.6, 30.2, 35.7, 38.9, 40.3, 41.6, 42.8,
        43.5, 44.9, 46.1, 47.4, 48.8, 47.2, 44.6, 41.3, 37.5, 33.1, 29.4, 26.7,
    )

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureConfig":
        from .io import read_toml

        data = read_toml(path)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"{path}: unknown fixture keys {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        if "reduced_caps" in kwargs:
            kwargs["reduced_caps"] = {**cls().reduced_caps, **kwargs["reduced_caps"]}
        cfg = cls(**kwargs)
        if len(cfg.benefit_ladder) != cfg.segments:
            raise ValidationError(f"{path}: benefit_ladder needs {cfg.segments} entries")
        if len(cfg.load_shape) != HORIZON or len(cfg.tlmp) != HORIZON:
            raise ValidationError(f"{path}: load_shape and tlmp need {HORIZON} entries")
        return cfg


def ieee13_network(reduced_caps: dict | None = None) -> Network:
    caps = FixtureConfig().reduced_caps if reduced_caps is None else reduced_caps
    lines = []
    for k, (a, b) in enumerate(FEEDER_LINES):
        cap = caps.get(f"{a}-{b}", caps.get(f"{b}-{a}", UNLIMITED_MW))
        lines.append(Line(k, from_label(a), from_label(b), float(cap)))
    return Network(tuple(range(13)), tuple(lines))


def ieee13_fixture(config_path: str | Path | None = None, with_baseline: bool = True) -> ClearingInput:
    """The 13-bus case-study input; ``assigned`` holds the baseline schedule
    unless ``with_baseline`` is false (then it is all zeros)."""
    cfg = FixtureConfig.from_file(config_path) if config_path else FixtureConfig()
    net = ieee13_network(cfg.reduced_caps)
    seg_cap = cfg.customer_capacity / cfg.segments
    bids = tuple(
        CustomerBid(
            from_label(label),
            tuple((round(b + k * cfg.benefit_offset, 10), seg_cap) for b in cfg.benefit_ladder),
        )
        for k, label in enumerate(cfg.microgrid_labels)
    )
    fixed = FixedLoadSeries(
        {from_label(int(label)): tuple(round(mw * s, 10) for s in cfg.load_shape) for label, mw in cfg.fixed_loads.items()}
    )
    inp = ClearingInput(
        network=net,
        bids=bids,
        fixed=fixed,
        tlmp=TlmpSeries(cfg.tlmp),
        assigned=AssignedPowerSeries.constant(0.0),
    )
    if with_baseline:
        inp = replace(inp, assigned=baseline_assignment(inp))
    return inp


def baseline_assignment(inp: ClearingInput, options: SolverOptions | None = None) -> AssignedPowerSeries:
    """Assigned power taken as the import of a price-following clearing at the
    unscaled T-LMP."""
    ref = grid_following(replace(inp, tlmp_scale=1.0, lambda_enabled=True), options)
    return AssignedPowerSeries(tuple(float(h.p_main) for h in ref.hours), allow_negative=True)


def daily_average(prices) -> np.ndarray:
    """Mean over hours of an ``(hours, buses)`` price array."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 2:
        raise ValueError("expected an (hours, buses) array")
    return prices.mean(axis=0)


Parameter = Literal["tlmp_scale", "mu"]


@dataclass(frozen=True)
class SweepSpec:
    parameter: Parameter
    values: tuple[float, ...]
    base: ClearingInput
    lambda_enabled: bool = True

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if self.parameter not in ("tlmp_scale", "mu"):
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if not values or not all(math.isfinite(v) for v in values):
            raise ValueError("sweep values must be a non-empty list of finite numbers")
        if list(values) != sorted(values):
            raise ValueError("sweep values must be sorted ascending")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class SweepRow:
    value: float
    avg_dlmp: np.ndarray
    total_abs_deviation: float
    total_import: float
    customer_total: float
    utility_payment: float
    surplus: float
    result: ClearingResult

    @property
    def price_spread(self) -> float:
        return float(self.avg_dlmp.max() - self.avg_dlmp.min())


@dataclass(frozen=True, eq=False)
class SweepResult:
    parameter: str
    rows: tuple[SweepRow, ...]
    buses: tuple[int, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    def avg_dlmp(self) -> np.ndarray:
        return np.array([r.avg_dlmp for r in self.rows])

    @property
    def deficits(self) -> np.ndarray:
        return np.array([r.surplus for r in self.rows])

    @property
    def deviations(self) -> np.ndarray:
        return np.array([r.total_abs_deviation for r in self.rows])

    @property
    def imports(self) -> np.ndarray:
        return np.array([r.total_import for r in self.rows])


def evaluate(base: ClearingInput, parameter: Parameter, value: float, options: SolverOptions | None = None) -> SweepRow:
    inp = replace(base, **{parameter: value})
    result = clear(inp, options)
    report = settle(result)
    return SweepRow(
        value=value,
        avg_dlmp=daily_average(result.dlmp_matrix()),
        total_abs_deviation=float(np.abs(result.deviation).sum()),
        total_import=float(result.p_main.sum()),
        customer_total=report.customer_total,
        utility_payment=report.utility_payment,
        surplus=report.surplus,
        result=result,
    )


def run_sweep(spec: SweepSpec, options: SolverOptions | None = None) -> SweepResult:
    base = replace(spec.base, lambda_enabled=spec.lambda_enabled)
    rows = tuple(evaluate(base, spec.parameter, v, options) for v in spec.values)
    return SweepResult(spec.parameter, rows, base.network.buses)


def case1_sweep(inp: ClearingInput, scales: Sequence[float] = CASE1_SCALES, options=None) -> SweepResult:
    """Price-following clearing (no deviation penalty) across T-LMP scales."""
    return run_sweep(SweepSpec("tlmp_scale", tuple(scales), replace(inp, mu=0.0)), options)


def case2_sweep(inp: ClearingInput, mus: Sequence[float] = CASE2_MUS, options=None) -> SweepResult:
    """Import cost switched off, deviation penalty varied.  Settlement still
    charges the unscaled T-LMP."""
    return run_sweep(SweepSpec("mu", tuple(mus), replace(inp, tlmp_scale=1.0), lambda_enabled=False), options)


def case3_sweep(inp: ClearingInput, scales: Sequence[float] = CASE3_SCALES, mu: float = 1.0, options=None) -> SweepResult:
    return run_sweep(SweepSpec("tlmp_scale", tuple(scales), replace(inp, mu=mu)), options)
