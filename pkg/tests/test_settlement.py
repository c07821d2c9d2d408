from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distmarket.clearing import clear
from distmarket.settlement import customer_payments, settle, surplus_by_price_gap, utility_payment
from helpers import random_feasible_day, two_bus


def test_empty_market():
    res = clear(two_bus(segments=(), fixed=0.0))
    _, total = customer_payments(res)
    assert total == 0


def test_congested_example():
    res = clear(two_bus(cap=12))
    report = settle(res)
    assert report.customer_total == pytest.approx(600)  # 50 * 12
    assert report.utility_payment == pytest.approx(420)  # 35 * 12
    assert report.surplus == pytest.approx(180)
    assert report.conservation_ok


def test_uncongested_example():
    report = settle(clear(two_bus()))
    assert report.customer_total == pytest.approx(875)  # 35 * 25
    assert report.surplus == pytest.approx(0, abs=1e-9)


def test_negative_surplus():
    # schedule pins imports at 20 MW; the partial 40 $/MWh segment sets prices below lambda = 45
    report = settle(clear(two_bus(mu=1000, pd=20, lam=45)))
    assert report.customer_total == pytest.approx(800)
    assert report.utility_payment == pytest.approx(900)
    assert report.surplus == pytest.approx(-100)


def test_zero_price_series():
    res = clear(two_bus(lam=0.0))
    assert utility_payment(res) == 0


def test_bases_agree_without_deviation():
    res = clear(two_bus(mu=1000, pd=20))
    assert utility_payment(res, basis="actual") == pytest.approx(utility_payment(res, basis="assigned"))


def test_bases_differ_with_deviation():
    res = clear(two_bus(mu=0, pd=5))
    assert utility_payment(res, basis="actual") == pytest.approx(35 * 25)
    assert utility_payment(res, basis="assigned") == pytest.approx(35 * 5)


def test_bad_basis():
    with pytest.raises(ValueError):
        utility_payment(clear(two_bus()), basis="both")


def test_explicit_tlmp_length_checked():
    with pytest.raises(ValueError):
        utility_payment(clear(two_bus()), tlmp=[1.0, 2.0])


@pytest.mark.parametrize("seed", range(8))
def test_two_form_identity(seed):
    rng = np.random.default_rng(seed)
    res = clear(random_feasible_day(rng, mu=float(rng.choice([0.0, 2.0, 50.0]))))
    report = settle(res)
    direct = surplus_by_price_gap(res)
    assert report.surplus == pytest.approx(direct, rel=1e-9, abs=1e-9)
    assert np.all(report.conservation_residuals <= 1e-6)


@lru_cache(maxsize=1)
def _day():
    return clear(random_feasible_day(np.random.default_rng(3)))


@given(st.floats(0.1, 10.0))
def test_linear_in_loads_with_frozen_prices(k):
    res = _day()
    prices = res.dlmp_matrix()
    loads = res.load_matrix()
    tlmp = np.array([res.input.effective_tlmp(t) for t in range(res.input.horizon)])

    def totals(scale):
        c_c = float(np.sum(prices * loads * scale))
        c_u = float(tlmp @ (res.p_main * scale))
        return np.array([c_c, c_u, c_c - c_u])

    np.testing.assert_allclose(totals(k), k * totals(1.0), rtol=1e-9, atol=1e-6)
