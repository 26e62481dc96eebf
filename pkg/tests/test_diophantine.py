"""Continued fractions, norm distances, annulus scans, gap-point construction."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactorder.diophantine import (GapPoint, ThetaSpec, annulus_hits,
                                    construct_gap_point, convergents,
                                    dist_to_nearest_int, estimate_exponent,
                                    gap_report, norm_violations,
                                    partial_quotients, violation_scan_all,
                                    violation_search)
from exactorder.errors import ConfigError, PrecisionError
from exactorder.params import ApproxFunction

GOLDEN = ThetaSpec.golden()
ZERO = ThetaSpec.zero()
PSI2 = ApproxFunction(tau=2.0)
PSI3 = ApproxFunction(tau=3.0)


# ----------------------------------------------------------------------
# theta values and continued fractions
# ----------------------------------------------------------------------

def test_theta_constructors():
    assert ZERO.is_zero and ZERO.value_float() == 0.0
    assert GOLDEN.value_float() == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-15)
    assert partial_quotients(GOLDEN, 8) == [1] * 8
    # 1 + sqrt 2 normalizes into [0, 1) as sqrt 2 - 1 = [0; 2, 2, 2, ...]
    s2 = ThetaSpec.quadratic_surd(1, 1, 2, 1)
    assert s2.value_float() == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert partial_quotients(s2, 6) == [2] * 6
    assert partial_quotients(ZERO, 5) == []


def test_theta_guards():
    with pytest.raises(ConfigError):
        ThetaSpec.quadratic_surd(1, 1, 2, 0)
    with pytest.raises(ConfigError):
        ThetaSpec.quadratic_surd(1, 0, 2, 1)
    with pytest.raises(ConfigError):
        ThetaSpec.quadratic_surd(1, 1, 9, 1)  # square d
    with pytest.raises(ConfigError):
        ThetaSpec.explicit_cf([1, 0, 2])
    with pytest.raises(ValueError):
        partial_quotients(GOLDEN, 0)
    with pytest.raises(ValueError):
        partial_quotients(ThetaSpec.explicit_cf([1, 2]), 3)


def test_explicit_cf_value():
    th = ThetaSpec.explicit_cf([1, 2, 3])
    # [0; 1, 2, 3] = 7/10
    assert th.value_float() == pytest.approx(0.7, abs=1e-15)
    assert partial_quotients(th, 3) == [1, 2, 3]
    with mp.workdps(30):
        assert float(th.value_mp()) == pytest.approx(0.7, abs=1e-15)


def test_golden_convergents_are_fibonacci():
    convs = convergents(GOLDEN, 100)
    assert convs == [(1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13),
                     (13, 21), (21, 34), (34, 55), (55, 89)]
    assert convergents(ZERO, 100) == []


def test_dist_to_nearest_int_oracle():
    # high-precision oracle, independent of the exact integer path
    with mp.workdps(60):
        th = (mp.sqrt(5) - 1) / 2
        for q in (1, 2, 3, 10, 55, 6765, 10**6 + 3):
            want = float(abs(q * th - mp.nint(q * th)))
            assert dist_to_nearest_int(GOLDEN, q) == pytest.approx(want, rel=1e-11)
    assert dist_to_nearest_int(ZERO, 7) == 0.0
    with pytest.raises(ValueError):
        dist_to_nearest_int(GOLDEN, 0)


def test_golden_hurwitz_constant():
    # q ||q theta|| -> 1/sqrt(5) along Fibonacci denominators
    q = 6765
    assert q * dist_to_nearest_int(GOLDEN, q) == pytest.approx(1 / math.sqrt(5), abs=1e-7)


def test_cf_distance_runs_out_of_digits():
    with pytest.raises(PrecisionError):
        dist_to_nearest_int(ThetaSpec.explicit_cf([1, 2]), 1000)


def test_estimate_exponent_golden():
    gamma, details = estimate_exponent(GOLDEN, 10**6, return_details=True)
    # irrationality measure convention: badly approximable theta sits at 2
    assert gamma == pytest.approx(2.0, abs=0.01)
    assert not details["unbounded_trend"]
    assert details["n_convergents"] == 28


def test_estimate_exponent_flags_liouville_growth():
    th = ThetaSpec.explicit_cf([2, 4, 16, 4096, 10**8, 10**8, 10**8])
    gamma, details = estimate_exponent(th, 10**7, return_details=True)
    assert details["unbounded_trend"]
    assert details["gamma_second_half"] > details["gamma_first_half"] + 0.25


def test_estimate_exponent_guards():
    with pytest.raises(ValueError):
        estimate_exponent(ZERO, 10**6)
    with pytest.raises(ValueError):
        estimate_exponent(GOLDEN, 500)


def test_norm_violations_golden():
    hits = norm_violations(GOLDEN, 1.2, 2000)
    assert hits.tolist() == [1, 2, 3, 5, 8, 13, 21, 34, 55]
    # confirm each decision against a 60-digit oracle (skip knife edges)
    with mp.workdps(60):
        th = (mp.sqrt(5) - 1) / 2
        got = set(hits.tolist())
        for q in range(1, 2001):
            d = abs(q * th - mp.nint(q * th))
            b = mp.mpf(q) ** mp.mpf(-1.2)
            if abs(d - b) < 1e-12:
                continue
            assert (d < b) == (q in got), f"q={q}"


# ----------------------------------------------------------------------
# annulus membership and violation scans
# ----------------------------------------------------------------------

def test_violation_search_control_point():
    # loosening psi1 to q^-2 must expose a violation for a near-rational x
    x = Fraction(1, 150) + Fraction(1, 10**9)
    hit = violation_search(x, PSI2, PSI3, Fraction(1, 2), ZERO, 100, 200)
    assert hit == (1, 149)
    all_hits = violation_scan_all(x, PSI2, PSI3, Fraction(1, 2), ZERO, 100, 200)
    assert all_hits and all_hits[0] == (1, 149)
    assert [q for _, q in all_hits] == sorted(q for _, q in all_hits)


def test_violation_search_empty_range():
    assert violation_search(Fraction(1, 3), PSI2, PSI3, 0.5, ZERO, 10, 11) is None
    assert violation_scan_all(Fraction(1, 3), PSI2, PSI3, 0.5, ZERO, 10, 10) == []


@settings(max_examples=25, deadline=None, derandomize=True)
@given(b=st.integers(min_value=3, max_value=30), a=st.integers(min_value=1, max_value=29))
def test_fraction_and_float_scans_agree(b, a):
    a = a % b or 1
    x = Fraction(a, b)  # Fraction reduces; both paths see the same point
    exact = violation_search(x, PSI2, PSI3, Fraction(1, 2), ZERO, 2, 300)
    floating = violation_search(float(x), PSI2, PSI3, 0.5, ZERO, 2, 300)
    assert exact == floating


def test_annulus_hits_oracle():
    # independent exact scan over a small range
    pt = construct_gap_point(101, 37)
    got = annulus_hits(pt.x, PSI3, PSI3, 0.5, ZERO, 2, 120)
    want = []
    for q in range(2, 120):
        hi = Fraction(1, q**3)
        lo = hi / 2
        for r in range(0, q + 1):
            if math.gcd(r, q) != 1:
                continue
            if lo <= abs(pt.x - Fraction(r, q)) <= hi:
                want.append((r, q))
    assert got == want
    assert (37, 101) in got


# ----------------------------------------------------------------------
# gap-point construction
# ----------------------------------------------------------------------

def test_construct_gap_point_101_37():
    pt = construct_gap_point(101, 37)
    assert (pt.q1, pt.r1, pt.q2, pt.r2) == (101, 37, 10837, 3970)
    # both memberships verified exactly, landing mid-annulus
    d1 = abs(pt.x - Fraction(pt.r1, pt.q1))
    d2 = abs(pt.x - Fraction(pt.r2, pt.q2))
    assert Fraction(1, 2 * 101**3) <= d1 <= Fraction(1, 101**3)
    assert Fraction(1, 2 * 10837**3) <= d2 <= Fraction(1, 10837**3)
    assert float(d2 * pt.q2**3) == pytest.approx(2.0 / 3.0, abs=1e-4)
    # second denominator is placed in the (1.05, 1.9) q1^2 window
    assert 1.05 * 101**2 < pt.q2 < 1.9 * 101**2
    # anchors are consecutive convergents: the determinant identity holds
    assert abs(pt.r2 * pt.q1 - pt.r1 * pt.q2) == 1


def test_gap_holds_between_scales():
    pt = construct_gap_point(101, 37)
    assert violation_search(pt.x, PSI3, PSI3, Fraction(1, 2), ZERO, pt.q1, pt.q2) is None
    rep = gap_report(pt, PSI3, PSI3, Fraction(1, 2), ZERO, cutoff=pt.q1)
    assert rep.violations == []
    d = rep.as_dict()
    assert d["searched"] == [101, 10837] or d["searched"] == (101, 10837)
    assert d["x"] == f"{pt.x.numerator}/{pt.x.denominator}"


def test_construct_gap_point_tau4():
    pt = construct_gap_point(11, 5, tau=4)
    d2 = abs(pt.x - Fraction(pt.r2, pt.q2))
    assert Fraction(1, 2 * pt.q2**4) <= d2 <= Fraction(1, pt.q2**4)


def test_construct_gap_point_guards():
    with pytest.raises(ValueError):
        construct_gap_point(100, 36)  # gcd 4
    with pytest.raises(ValueError):
        construct_gap_point(101, 0)
    with pytest.raises(ValueError):
        construct_gap_point(101, 37, tau=2)
