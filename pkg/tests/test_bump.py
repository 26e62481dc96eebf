"""Bump construction: width schedules, transform, grids, decay certificates."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactorder.bump import (ZETA_4_3, BumpSpec, bump_grid, bump_transform,
                             certify_decay, decay_bound,
                             decay_bound_tail_integral, log_abs_transform,
                             widths_schedule)
from exactorder.errors import CertificationError, ConfigError, ResolutionError


def test_widths_schedule_shape():
    spec = widths_schedule(64, 0.27)
    assert spec.depth == 64
    assert spec.widths[0] == 0.27
    np.testing.assert_allclose(
        spec.widths, 0.27 * np.arange(1, 65, dtype=float) ** (-4.0 / 3.0))
    assert np.all(np.diff(spec.widths) <= 0)
    assert spec.widths.sum() <= 1.0
    assert spec.support_halfwidth == pytest.approx(spec.widths.sum() / 2.0)


def test_widths_schedule_guards():
    with pytest.raises(ConfigError):
        widths_schedule(1, 0.27)
    with pytest.raises(ConfigError):
        widths_schedule(8, 0.0)


def test_zeta_normalizer_keeps_budget():
    # the stored constant sits just above zeta(4/3), so A = 1/ZETA_4_3 keeps
    # the width sum below 1 for every truncation depth at once
    import mpmath as mp
    assert float(mp.zeta(mp.mpf(4) / 3)) == pytest.approx(ZETA_4_3, abs=1e-7)
    spec = widths_schedule(5000, 1.0 / ZETA_4_3)
    assert spec.widths.sum() <= 1.0


def test_bumpspec_guards():
    with pytest.raises(ConfigError):
        BumpSpec(widths=np.array([]))
    with pytest.raises(ConfigError):
        BumpSpec(widths=np.array([0.2, -0.1]))
    with pytest.raises(ConfigError):
        BumpSpec(widths=np.array([0.1, 0.2]))  # increasing
    with pytest.raises(ConfigError):
        BumpSpec(widths=np.array([0.8, 0.4]))  # sum > 1


def test_transform_basics(bump64):
    assert bump_transform(bump64, 0.0) == 1.0
    assert isinstance(bump_transform(bump64, 3.7), float)
    xi = np.linspace(-40, 40, 401)
    vals = bump_transform(bump64, xi)
    np.testing.assert_allclose(vals, vals[::-1], atol=0)  # even
    assert np.all(np.abs(vals) <= 1.0)


def test_transform_oracle(bump64):
    # independent sinc product, no shared helpers
    rng = np.random.default_rng(3)
    xi = rng.uniform(-500, 500, 64)
    direct = np.prod(np.sinc(np.multiply.outer(xi, bump64.widths)), axis=-1)
    np.testing.assert_allclose(bump_transform(bump64, xi), direct, atol=1e-13)


def test_transform_exact_zeros():
    spec = widths_schedule(2, 0.25)
    # a_1 = 1/4, so xi = 4 makes the first factor vanish identically
    assert bump_transform(spec, 4.0) == 0.0
    assert log_abs_transform(spec, np.array([4.0]))[0] == -math.inf


def test_grid_guarantees(bump64):
    g = bump_grid(bump64, 1 << 14)
    assert g.x0 == -0.5 and g.h == 1.0 / (1 << 14)
    assert len(g.samples) == (1 << 14) + 1
    assert np.all(g.samples >= 0.0)
    assert abs(np.trapezoid(g.samples, dx=g.h) - 1.0) < 1e-8
    # symmetric kernels give a symmetric profile
    assert np.max(np.abs(g.samples - g.samples[::-1])) < 1e-12
    xs = g.x0 + g.h * np.arange(len(g.samples))
    assert np.all(g.samples[np.abs(xs) > bump64.support_halfwidth] == 0.0)


def test_grid_matches_transform(bump64):
    # trapezoid quadrature of the grid against the closed-form transform
    g = bump_grid(bump64, 1 << 14)
    xs = g.x0 + g.h * np.arange(len(g.samples))
    for xi in (0.0, 1.0, 2.0, 5.0, 17.0):
        quad = np.trapezoid(g.samples * np.cos(2 * np.pi * xi * xs), dx=g.h)
        assert abs(quad - bump_transform(bump64, xi)) < 2e-6


def test_grid_resolution_errors(bump64):
    with pytest.raises(ConfigError):
        bump_grid(bump64, 3000)  # not a power of two
    with pytest.raises(ConfigError):
        bump_grid(bump64, 1 << 8)  # below 2^10
    with pytest.raises(ResolutionError) as exc:
        bump_grid(bump64, 1 << 10)  # a_64 ~ 1e-3 < 4 cells
    req = exc.value.required
    assert req and (req & (req - 1)) == 0
    assert bump64.widths[-1] * req >= 4.0  # the advertised N actually works
    bump_grid(bump64, req)


def test_certify_decay_frozen(bump64):
    C = certify_decay(bump64, (1e2, 1e4))
    assert math.isfinite(C)
    assert C == pytest.approx(3.914130685418947e286, rel=1e-9)
    # the certificate it encodes really holds on an off-grid sample;
    # exp(-xi^{3/4}) underflows at this range, so compare in log space
    xi = np.geomspace(1.03e2, 0.97e4, 777)
    assert np.all(log_abs_transform(bump64, xi) <= math.log(C) + 1e-9 - xi**0.75)


def test_certify_decay_shallow_depth_fails():
    shallow = widths_schedule(8, 0.27)
    # truncation onset K^{4/3}/A ~ 59 sits far below the requested 1e4
    with pytest.raises(CertificationError) as exc:
        certify_decay(shallow, (1e2, 1e4))
    assert exc.value.xi is not None and 1e2 <= exc.value.xi <= 1e4


def test_certify_decay_range_guards(bump64):
    for rng in ((0.5, 10.0), (10.0, 2e6), (100.0, 100.0)):
        with pytest.raises(ConfigError):
            certify_decay(bump64, rng)


def test_decay_bound_dominates(bump64):
    xi = np.geomspace(0.1, 1e5, 300)
    bound = decay_bound(bump64, xi)
    assert np.all(np.abs(bump_transform(bump64, xi)) <= bound + 1e-300)
    assert np.all(bound <= 1.0)
    assert isinstance(decay_bound(bump64, 12.0), float)


@settings(max_examples=25, deadline=None, derandomize=True)
@given(K=st.integers(min_value=2, max_value=20),
       A=st.floats(min_value=0.05, max_value=0.27),
       xi=st.floats(min_value=0.0, max_value=1e5))
def test_decay_bound_property(K, A, xi):
    spec = widths_schedule(K, A)
    assert abs(bump_transform(spec, xi)) <= decay_bound(spec, xi) + 1e-300


def test_tail_integral_bounds(bump64):
    tail = decay_bound_tail_integral(bump64, 100.0)
    assert 0.0 < tail < 1e-12
    # dominates a direct Riemann sum of the integrand over a finite stretch
    grid = np.geomspace(100.0, 1e6, 20001)
    lower = np.sum(decay_bound(bump64, grid)[1:] * np.diff(grid))
    assert tail >= lower
    assert decay_bound_tail_integral(bump64, 200.0) < tail
    with pytest.raises(ConfigError):
        decay_bound_tail_integral(BumpSpec(widths=np.array([0.3])), 10.0)
    with pytest.raises(ValueError):
        decay_bound_tail_integral(bump64, 0.0)
