"""Customer payments, the DMO's payment to the ISO, and the resulting surplus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .clearing import ClearingResult

Basis = Literal["actual", "assigned"]

#: Per-hour |sum(D) - PM| above this points at an engine bug.
CONSERVATION_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SettlementReport:
    payments: np.ndarray  # (hours, buses), $
    customer_total: float
    utility_payment: float
    surplus: float
    conservation_residuals: np.ndarray
    basis: str = "actual"

    @property
    def per_bus(self) -> np.ndarray:
        return self.payments.sum(axis=0)

    @property
    def conservation_ok(self) -> bool:
        return bool(np.all(self.conservation_residuals <= CONSERVATION_TOL))


def _tlmp(result: ClearingResult, tlmp: Sequence[float] | None) -> np.ndarray:
    if tlmp is None:
        return np.array([result.input.effective_tlmp(h.hour) for h in result.hours])
    prices = np.asarray(getattr(tlmp, "prices", tlmp), dtype=float)
    if prices.shape != (len(result.hours),):
        raise ValueError(f"expected {len(result.hours)} T-LMP entries, got {prices.shape}")
    return prices


def customer_payments(result: ClearingResult) -> tuple[np.ndarray, float]:
    """Price times load at every bus and hour, and their sum."""
    payments = result.dlmp_matrix() * result.load_matrix()
    return payments, float(payments.sum())


def utility_payment(result: ClearingResult, tlmp=None, basis: Basis = "actual") -> float:
    """What the DMO owes the ISO.

    ``basis="actual"`` prices the realized import, ``"assigned"`` the ISO's
    award.  ``tlmp`` defaults to the scaled T-LMP the clearing ran with.
    """
    prices = _tlmp(result, tlmp)
    if basis == "actual":
        power = result.p_main
    elif basis == "assigned":
        power = np.asarray(result.input.assigned.power, dtype=float)
    else:
        raise ValueError(f"basis must be 'actual' or 'assigned', got {basis!r}")
    return float(prices @ power)


def settle(result: ClearingResult, tlmp=None, basis: Basis = "actual") -> SettlementReport:
    payments, c_c = customer_payments(result)
    c_u = utility_payment(result, tlmp, basis)
    residuals = np.abs(result.load_matrix().sum(axis=1) - result.p_main)
    return SettlementReport(payments, c_c, c_u, c_c - c_u, residuals, basis)


def surplus_by_price_gap(result: ClearingResult, tlmp=None) -> float:
    """Surplus as the sum of (D-LMP - T-LMP) * load; equals ``settle().surplus``
    on the ``actual`` basis whenever loads balance imports."""
    prices = _tlmp(result, tlmp)
    gap = result.dlmp_matrix() - prices[:, None]
    return float(np.sum(gap * result.load_matrix()))
