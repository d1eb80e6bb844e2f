import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from pvbatt.dispatch import SystemConfig, dispatch_cost_min, dispatch_grid_friendly, dispatch_netting
from pvbatt.metrics import (
    MetricError, compute_scr_ssr, curtailment_losses, peak_feed_in_pct, self_consumption_numerator,
)

from oracles import random_dispatch_instance

TWO_STEP = SystemConfig(capacity_kwh=1.0, pv_kwp=1.0, r_ch_max=4.0, r_dch_max=4.0)


def test_pv_below_load_is_fully_self_consumed():
    load = np.array([2.0, 3.0, 1.0])
    pv = np.array([1.0, 3.0, 0.5])
    m = compute_scr_ssr(dispatch_netting(load, pv, SystemConfig(pv_kwp=4.0)))
    assert m.scr == 1.0
    assert m.ssr == pytest.approx(4.5 / 6.0)


def test_two_step_numerator_both_ways():
    d = dispatch_cost_min([1.0, 1.0], [2.0, 0.0], TWO_STEP)
    m = compute_scr_ssr(d)
    assert m.self_consumed_kwh == pytest.approx(1.8836, abs=1e-12)
    assert self_consumption_numerator(d) == pytest.approx(1.8836, abs=1e-12)
    assert m.scr == pytest.approx(0.9418, abs=1e-12)
    assert m.ssr == pytest.approx(0.9418, abs=1e-12)


def test_zero_totals_raise():
    d = dispatch_netting([1.0, 1.0], [0.0, 0.0], SystemConfig(pv_kwp=1.0))
    with pytest.raises(MetricError, match="PV"):
        compute_scr_ssr(d)
    d = dispatch_netting([0.0, 0.0], [1.0, 0.0], SystemConfig(pv_kwp=1.0))
    with pytest.raises(MetricError, match="demand"):
        compute_scr_ssr(d)


def test_curtailment_below_cap_is_zero():
    d = dispatch_netting([1.0] * 4, [1.0, 1.1, 1.2, 0.0], SystemConfig(pv_kwp=10.0))
    assert curtailment_losses(d) == 0.0


def test_curtailment_single_full_power_interval():
    # 10 kWp feeding 2.5 kWh in 15 minutes is 100 % of nominal power
    load = np.zeros(4)
    load[1:] = 1.0
    pv = np.array([2.5, 0.5, 0.5, 0.5])
    d = dispatch_netting(load, pv, SystemConfig(pv_kwp=10.0))
    expected = 0.3 * 10.0 * 0.25 / pv.sum()
    assert curtailment_losses(d, cap_fraction=0.7) == pytest.approx(expected, abs=1e-15)
    assert compute_scr_ssr(d).curtailment_loss_frac == pytest.approx(expected, abs=1e-15)
    with pytest.raises(MetricError):
        curtailment_losses(d, cap_fraction=0.0)


def test_peak_feed_in():
    d = dispatch_netting([1.0, 1.0], [0.5, 0.5], SystemConfig(pv_kwp=2.0))
    assert peak_feed_in_pct(d) == 0.0
    d = dispatch_netting([0.0, 1.0], [0.25, 0.5], SystemConfig(pv_kwp=2.0))
    assert peak_feed_in_pct(d) == pytest.approx(0.5)


def test_grid_friendly_lowers_peak_on_synthetic_fleet(fleet, pv_norm):
    prof = fleet[0]
    cfg = SystemConfig(pv_size_rel=1.0, batt_size_rel=0.2)
    day = slice(180 * 96, 187 * 96)
    load = prof.load.values[day]
    pv = pv_norm.values[day] * prof.annual_consumption_mwh
    c = compute_scr_ssr(dispatch_cost_min(load, pv, cfg, annual_mwh=prof.annual_consumption_mwh))
    g = compute_scr_ssr(dispatch_grid_friendly(load, pv, cfg,
                                               annual_mwh=prof.annual_consumption_mwh))
    assert g.peak_feed_in_pct_of_pv < c.peak_feed_in_pct_of_pv


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), C=st.floats(0, 40))
def test_identity_and_expansion(seed, C):
    rng = np.random.default_rng(seed)
    load, pv = random_dispatch_instance(rng, T=int(rng.integers(4, 400)))
    assume(pv.sum() > 0)  # SCR is undefined without generation
    d = dispatch_cost_min(load, pv, SystemConfig(capacity_kwh=C, pv_kwp=10.0))
    m = compute_scr_ssr(d)
    assert m.scr * m.pv_kwh == pytest.approx(m.ssr * m.demand_kwh, rel=1e-9)
    assert self_consumption_numerator(d) == pytest.approx(m.self_consumed_kwh, rel=1e-9)
    assert 0 <= m.scr <= 1 + 1e-12 and 0 <= m.ssr <= 1 + 1e-12
    assert math.isclose(m.feed_in_kwh, d.feed_in.sum(), rel_tol=1e-12)
