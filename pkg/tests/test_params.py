"""Exponent algebra and approximation-function family."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactorder.errors import AdmissibilityError, ConfigError
from exactorder.params import (ApproxFunction, c_of_M, derive_exponents,
                               eval_psi, fit_order, order_of, tau_threshold)


# ----------------------------------------------------------------------
# derived exponents
# ----------------------------------------------------------------------

def test_canonical_exponents(exponents):
    # gamma=1, tau1=tau2=3, epsilon=0.02: beta and alpha are exact in floats
    assert exponents.beta == 4.0
    assert exponents.beta_eps == 3.98
    assert exponents.alpha == 2.0 / 9.0
    assert exponents.delta == pytest.approx(0.08544983989121374, abs=1e-15)
    assert exponents.admissible
    assert exponents.violated_condition is None


def test_gamma2_exponents():
    es = derive_exponents(2.0, 8.0, 8.0, 0.02)
    assert es.beta == 12.25
    assert es.alpha == pytest.approx(8.5 / 90.0, abs=1e-15)
    assert es.delta == pytest.approx(0.039964293820823074, abs=1e-15)


def test_delta_limit_is_half_alpha():
    es = derive_exponents(1.0, 3.0, 3.0, 1e-6)
    assert abs(es.delta - es.alpha / 2.0) < 1e-4


def test_inadmissible_low_order_raises():
    with pytest.raises(AdmissibilityError) as exc:
        derive_exponents(1.0, 2.0, 2.0, 0.05)
    assert exc.value.violated == "beta_eps <= tau2"


def test_inadmissible_slack_raises():
    # beta_eps = 12.2 clears tau2 = 8, but delta = 0.0294 < epsilon = 0.05
    with pytest.raises(AdmissibilityError) as exc:
        derive_exponents(2.0, 8.0, 8.0, 0.05)
    assert exc.value.violated == "delta - epsilon <= 0"


def test_inadmissible_nonstrict_is_flagged():
    es = derive_exponents(2.0, 8.0, 8.0, 0.05, strict=False)
    assert not es.admissible
    assert es.violated_condition == "delta - epsilon <= 0"
    assert es.delta == pytest.approx(0.02944302721088433, abs=1e-15)
    low = derive_exponents(1.0, 2.0, 2.0, 0.05, strict=False)
    assert low.violated_condition == "beta_eps <= tau2"
    assert low.beta == 1.0
    assert math.isnan(low.alpha)


@pytest.mark.parametrize("kwargs", [
    dict(gamma=0.5, tau1=3.0, tau2=3.0, epsilon=0.02),
    dict(gamma=1.0, tau1=2.0, tau2=3.0, epsilon=0.02),
    dict(gamma=1.0, tau1=3.0, tau2=1.5, epsilon=0.02),
    dict(gamma=1.0, tau1=3.0, tau2=3.0, epsilon=0.0),
])
def test_parameter_guards(kwargs):
    with pytest.raises(ConfigError):
        derive_exponents(**kwargs)


def test_as_dict_round_trip(exponents):
    d = exponents.as_dict()
    assert d["beta"] == 4.0 and d["admissible"] is True
    assert set(d) == {"gamma", "tau1", "tau2", "epsilon", "beta", "beta_eps",
                      "delta", "alpha", "admissible", "violated_condition"}


def test_tau_threshold_golden_value():
    assert tau_threshold(1.0) == (3.0 + math.sqrt(5.0)) / 2.0


@pytest.mark.parametrize("gamma", [1.0, 1.5, 2.0, 3.0])
def test_tau_threshold_fixed_point(gamma):
    ts = tau_threshold(gamma)
    assert abs(((ts - 1.0) / gamma) ** 2 - ts) < 1e-12 * ts


def test_threshold_separates_admissibility():
    ts = tau_threshold(1.0)
    ok = derive_exponents(1.0, ts + 0.05, ts + 0.05, 1e-4)
    assert ok.admissible
    bad = derive_exponents(1.0, ts - 0.05, ts - 0.05, 1e-4, strict=False)
    assert not bad.admissible


# ----------------------------------------------------------------------
# approximation functions
# ----------------------------------------------------------------------

def test_eval_psi_scalar_and_array():
    f = ApproxFunction(tau=3.0)
    assert isinstance(f(2), float)
    assert f(2) == 0.125
    qs = np.array([2, 4, 8])
    np.testing.assert_allclose(eval_psi(f, qs), [0.125, 0.015625, 0.001953125])


def test_eval_psi_rejects_small_q():
    f = ApproxFunction(tau=3.0)
    with pytest.raises(ValueError):
        eval_psi(f, 1)
    with pytest.raises(ValueError):
        eval_psi(f, np.array([5, 1]))


def test_power_log_family():
    f = ApproxFunction(family="power_log", tau=2.0, log_power=1.0)
    assert f(10) == pytest.approx(math.log(10) / 100.0, rel=1e-12)
    with pytest.raises(ConfigError):
        ApproxFunction(family="power", tau=2.0, log_power=1.0)
    with pytest.raises(ConfigError):
        ApproxFunction(family="cosine", tau=2.0)


def test_mp_value_matches_double():
    import mpmath as mp
    f = ApproxFunction(family="power_log", tau=2.5, log_power=2.0, prefactor=1.3)
    with mp.workdps(30):
        assert float(f.mp_value(977)) == pytest.approx(f(977), rel=1e-14)


def test_fit_order_recovers_tau():
    f = ApproxFunction(tau=2.7, prefactor=0.4)
    assert fit_order(f) == pytest.approx(order_of(f), abs=1e-9)
    g = ApproxFunction(family="power_log", tau=2.7, log_power=1.5)
    # the log log q regressor keeps the slowly varying factor out of the slope
    assert fit_order(g) == pytest.approx(2.7, abs=5e-3)


@settings(max_examples=25, deadline=None, derandomize=True)
@given(tau=st.floats(min_value=2.0, max_value=6.0),
       pref=st.floats(min_value=0.5, max_value=2.0))
def test_order_recovery_property(tau, pref):
    f = ApproxFunction(tau=tau, prefactor=pref)
    assert abs(fit_order(f) - tau) < 1e-6
    qs = np.arange(2, 60)
    vals = eval_psi(f, qs)
    assert np.all(np.diff(vals) < 0)
    assert np.all(vals > 0)


# ----------------------------------------------------------------------
# annulus shrink factor
# ----------------------------------------------------------------------

def test_c_of_M():
    assert c_of_M(64, 0.02) == pytest.approx(0.999168569213607, abs=1e-15)
    assert 0.0 < c_of_M(10**6, 5.0) < 1.0
    with pytest.raises(ValueError):
        c_of_M(1, 0.02)
    with pytest.raises(ValueError):
        c_of_M(64, 0.0)
