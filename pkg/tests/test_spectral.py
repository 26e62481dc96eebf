"""Spectral vectors, certified convolution, schedules, stability envelopes."""

import math

import numpy as np
import pytest

from exactorder.bump import widths_schedule
from exactorder.diophantine import ThetaSpec
from exactorder.errors import (AdmissibilityError, BudgetError, ConfigError,
                               StrictModeError)
from exactorder.layer import ScaleLayer, f_hat
from exactorder.params import ApproxFunction
from exactorder.spectral import (ScaleSchedule, SpectralVector, StabilityParams,
                                 _GEnvelope, check_inductive_bounds,
                                 check_stability, convolve, dense_convolve,
                                 identity_provider, layer_provider,
                                 layer_vector, point_mass, product_measure,
                                 stability_trend, stencil_provider,
                                 sum_exp_tail, sum_exp_tail_exact,
                                 sum_power_band, verify_stability_hypotheses)


def _honest_vector(W: int = 110_000, T: float = 100.0, seed: int = 11) -> SpectralVector:
    """Random hermitian test vector genuinely inside its tail descriptor."""
    rng = np.random.default_rng(seed)
    u = np.arange(W + 1, dtype=float)
    dense = 0.5 * np.exp(-np.sqrt(u / T)) * np.exp(2j * np.pi * rng.uniform(size=W + 1))
    dense[0] = 1.0
    return SpectralVector(dense=dense, tail_amp=1.0, tail_scale=T, label="test")


# ----------------------------------------------------------------------
# vector container semantics
# ----------------------------------------------------------------------

def test_vector_lookup_rules():
    v = SpectralVector(dense=np.array([1.0, 0.5j, 0.25]), tail_amp=1.0,
                       tail_scale=10.0, sampled_s=np.array([10]),
                       sampled_v=np.array([0.1j]))
    assert v.dense_limit == 2 and v.window == 10
    assert v.at(1) == 0.5j and v.at(-1) == -0.5j
    assert v.at(10) == 0.1j and v.at(-10) == -0.1j
    with pytest.raises(KeyError):
        v.at(5)
    s, vals = v.stored()
    assert s.tolist() == [0, 1, 2, 10] and vals[-1] == 0.1j
    assert v.envelope(10) == pytest.approx(math.exp(-1.0))


def test_vector_sampled_must_be_beyond_dense():
    with pytest.raises(ConfigError):
        SpectralVector(dense=np.zeros(5), tail_amp=1.0, tail_scale=1.0,
                       sampled_s=np.array([3]), sampled_v=np.array([0j]))


def test_vector_evaluator_fallback():
    v = SpectralVector(dense=np.array([1.0 + 0j]), tail_amp=1.0, tail_scale=1.0,
                       evaluator=lambda s: 1.0 / s)
    assert v.at(4) == 0.25
    assert v.at(-4) == 0.25  # conjugation of a real value


def test_boundary_consistency():
    ok = SpectralVector(dense=np.array([1.0, 0.3]), tail_amp=1.0, tail_scale=1e6)
    assert ok.boundary_consistent()
    bad = SpectralVector(dense=np.array([1.0, 0.9]), tail_amp=0.1, tail_scale=1.0)
    assert not bad.boundary_consistent()


def test_point_mass_unit():
    pm = point_mass()
    assert pm.at(0) == 1.0 and pm.dense_limit == 0 and pm.tail_amp == 0.0


# ----------------------------------------------------------------------
# schedules
# ----------------------------------------------------------------------

def test_schedule_scales(schedule):
    assert schedule.scales == (16, 62001)
    assert schedule.M(0) == 0 and schedule.M(1) == 16 and schedule.M(2) == 62001
    assert schedule.mass_sum == pytest.approx(1.1785411774039123, abs=1e-12)
    lo, hi = schedule.mass_interval
    assert lo == pytest.approx(-0.1785411774039123, abs=1e-12)
    assert hi == pytest.approx(2.178541177403912, abs=1e-12)


def test_schedule_guards():
    with pytest.raises(ConfigError):
        ScaleSchedule(M1=1, beta_eps=3.98, depth=2, delta=0.08)
    with pytest.raises(ConfigError):
        ScaleSchedule(M1=16, beta_eps=1.0, depth=2, delta=0.08)
    with pytest.raises(ConfigError):
        ScaleSchedule(M1=16, beta_eps=3.98, depth=0, delta=0.08)


def test_schedule_paper_strict_mass():
    # at these small scales the mass bracket is far wider than 1/100
    with pytest.raises(StrictModeError):
        ScaleSchedule(M1=16, beta_eps=3.98, depth=2, delta=0.08544983989121374,
                      mode="paper-strict")


# ----------------------------------------------------------------------
# providers
# ----------------------------------------------------------------------

def test_layer_provider_fields(toy_layer):
    F = layer_provider(toy_layer)
    assert F.f0 == 1.0 + 0j
    assert F.medium_max == pytest.approx(2.0 * 10 / 60.0)
    assert F.rho == pytest.approx(sum(1.0 / q for q in (11, 13, 17, 19)))
    ts = np.array([22, 143], dtype=np.int64)
    np.testing.assert_allclose(F.value(ts), f_hat(toy_layer, ts), rtol=1e-15)


def test_stencil_provider_guard():
    with pytest.raises(ConfigError):
        stencil_provider(0, 0.5)


# ----------------------------------------------------------------------
# layer vectors
# ----------------------------------------------------------------------

def test_layer_vector_dense_and_tail(toy_layer):
    vec = layer_vector(toy_layer, 500, sampled_s=np.array([100, 600, 600, 700]))
    np.testing.assert_array_equal(vec.dense, f_hat(toy_layer, np.arange(501)))
    assert vec.tail_scale == pytest.approx(10.0 ** 2.2)
    assert vec.sampled_s.tolist() == [600, 700]  # deduped, below-window dropped
    assert vec.scales == (10,)
    # the descriptor dominates fresh probes (prime multiples, worst case)
    s = 11 * np.unique(np.geomspace(20, 1e5, 200).astype(np.int64))
    assert np.all(np.abs(f_hat(toy_layer, s)) <= vec.envelope(s))
    assert vec.boundary_consistent()


def test_layer_vector_poly_tail_dominates(toy_layer):
    vec = layer_vector(toy_layer, 100)
    S = 10**5
    s = np.arange(S, S + 200_000, dtype=np.int64)
    brute = 2.0 * np.abs(f_hat(toy_layer, s)).sum()  # partial tail, both signs
    assert vec.tail_poly_bound(float(S)) >= brute


# ----------------------------------------------------------------------
# certified convolution vs the dense oracle
# ----------------------------------------------------------------------

def test_convolve_matches_dense_oracle(toy_layer):
    G = _honest_vector()
    out = convolve(layer_provider(toy_layer), G, W_out=100, tol=1e-10)
    assert out.trunc_err <= 1e-10
    # oracle: FFT convolution with the provider materialized far past the cut
    Fd = f_hat(toy_layer, np.arange(0, G.dense_limit + 101))
    Fd[0] = 1.0
    oracle = dense_convolve(Fd, G.dense, 100)
    assert np.abs(out.dense - oracle).max() < 1e-12


def test_convolve_identity(toy_layer):
    G = _honest_vector(W=2000)
    out = convolve(identity_provider(), G, W_out=50, tol=1e-8)
    np.testing.assert_array_equal(out.dense, G.dense[:51])
    assert out.trunc_err == 0.0


def test_convolve_stencil_oracle():
    G = _honest_vector()
    a = 0.3 + 0.1j
    out = convolve(stencil_provider(7, a), G, W_out=50, tol=1e-9)
    full = np.concatenate([np.conj(G.dense[1:][::-1]), G.dense])
    off = G.dense_limit
    s = np.arange(51)
    manual = G.dense[:51] + a * full[off + s - 7] + np.conj(a) * full[off + s + 7]
    assert np.abs(out.dense - manual).max() < 1e-9


def test_convolve_sampled_pass(toy_layer):
    # sampled coefficients agree with a wide dense pass of the same product
    psi = ApproxFunction(tau=2.2)
    base = ScaleLayer(M=12, epsilon=0.05, psi1=psi, psi2=psi)
    G = layer_vector(base, 4000)
    F = layer_provider(toy_layer)
    samp = np.array([150, 500, 2000])
    narrow = convolve(F, G, W_out=100, tol=1e-8, sampled_s=samp)
    wide = convolve(F, G, W_out=2048, tol=1e-8)
    for s, v in zip(narrow.sampled_s, narrow.sampled_v):
        assert abs(v - wide.dense[int(s)]) < 2e-8


def test_convolve_budget_errors(toy_layer):
    G = _honest_vector(W=2000)  # no evaluator: the cut cannot extend it
    with pytest.raises(BudgetError) as exc:
        convolve(layer_provider(toy_layer), G, W_out=100, tol=1e-10)
    assert exc.value.required > 2000
    with pytest.raises(BudgetError):
        convolve(layer_provider(toy_layer), _honest_vector(), W_out=100,
                 tol=1e-12, max_cut=5000)
    with pytest.raises(ConfigError):
        convolve(layer_provider(toy_layer), _honest_vector(W=2000), W_out=-1)


def test_dense_convolve_brute_force():
    # validate the oracle itself on a tiny window
    rng = np.random.default_rng(5)
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    a[0], b[0] = a[0].real, b[0].real
    fa = np.concatenate([np.conj(a[1:][::-1]), a])
    fb = np.concatenate([np.conj(b[1:][::-1]), b])
    want = np.zeros(4, dtype=complex)
    for s in range(4):
        want[s] = sum(fa[t + 5] * fb[s - t + 3] for t in range(-5, 6)
                      if -3 <= s - t <= 3)
    np.testing.assert_allclose(dense_convolve(a, b, 3), want, atol=1e-12)
    with pytest.raises(ValueError):
        dense_convolve(a, b, 20)


# ----------------------------------------------------------------------
# the depth-2 measure
# ----------------------------------------------------------------------

def test_product_measure_shape(measure_levels, schedule):
    assert len(measure_levels) == 2
    mu1, mu2 = measure_levels
    assert mu1.label == "mu_hat^(1)" and mu2.label == "mu_hat^(2)"
    assert mu1.scales == (16,) and mu2.scales == (16, 62001)
    assert mu1.at(0) == pytest.approx(1.0)
    assert abs(mu2.at(0) - 1.0) < 1e-3


def test_product_measure_mass_and_bounds(mu2, schedule):
    rep = mu2.bound_report
    assert rep.depth == 2 and rep.mass_ok and rep.band_ok
    lo, hi = rep.mass_interval
    assert lo < rep.mass < hi
    assert rep.trunc_err < 1e-5
    d = rep.as_dict()
    assert d["mass_interval"] == [lo, hi]


def test_product_measure_hermitian(mu2):
    for s in (3, 17, 9973):
        assert mu2.at(-s) == pytest.approx(np.conj(mu2.at(s)), abs=1e-15)


def test_product_measure_guards(schedule, layers):
    with pytest.raises(ConfigError):
        product_measure(schedule, layers[:1])
    bad = [layers[1], layers[0]]
    with pytest.raises(ConfigError):
        product_measure(schedule, bad)


def test_check_inductive_bounds_window_note(mu2, schedule):
    rep = check_inductive_bounds(mu2, schedule, epsilon=0.02, tau2=3.0)
    # the depth-2 power band ends near 62001^(3.06), far past the window
    assert rep.window_note != ""
    assert rep.window == mu2.window


# ----------------------------------------------------------------------
# envelope sums and the stability step
# ----------------------------------------------------------------------

def test_tail_sum_helpers():
    assert sum_exp_tail(50.0, 0.3) == pytest.approx(sum_exp_tail_exact(50.0, 0.3),
                                                    rel=1e-9)
    v = np.arange(7, 3001, dtype=float)
    assert sum_power_band(7, 3000, 0.3) == pytest.approx(float((2 * v**-0.3).sum()),
                                                         rel=1e-14)
    assert sum_power_band(10, 9, 0.3) == 0.0


def test_genvelope_window_brute():
    p = StabilityParams(4, 2.5, 0.05, 2.0)
    env = _GEnvelope(p)
    brute = sum(env.env(v) for v in range(-3, 40))
    assert env.window(-3, 39) == pytest.approx(brute, rel=1e-8)
    brute_mass = 2.0 + 2.0 * sum(env.env(v) for v in range(1, 200_000))
    assert env.mass() == pytest.approx(brute_mass, rel=1e-8)
    assert env.window(5, 2) == 0.0


def test_stability_params_frozen():
    p = StabilityParams(64, 2.62, 0.05, 2.0)
    assert p.delta == pytest.approx(0.08348030570252786, abs=1e-15)
    assert p.M_next == 53975
    assert (p.Z_G, p.Z_B, p.T_med) == (6208, 8661728507, 5023367304)
    assert p.T_F == 2913300625.0
    assert p.a_G == 1.0 / 128.0
    assert p.F_med == pytest.approx(53975.0 ** -0.95, rel=1e-15)


def test_stability_params_guards():
    with pytest.raises(ConfigError):
        StabilityParams(1, 2.62)
    with pytest.raises(AdmissibilityError):
        StabilityParams(64, 2.0, 0.05, 2.0)  # delta < 0


def test_check_stability_frozen_m64():
    rep = check_stability(StabilityParams(64, 2.62, 0.05, 2.0))
    assert rep.synthetic and rep.hypothesis_warnings == []
    assert rep.dev_sup == pytest.approx(0.9630514513587921, rel=1e-12)
    assert rep.dev_argmax_s == 6208
    assert rep.bound_a == pytest.approx(0.40267541120661476, rel=1e-12)
    assert not rep.pass_a  # finite-scale deviation genuinely exceeds M^-delta
    assert rep.sup_b == pytest.approx(41647.60959392963, rel=1e-9)
    assert not rep.pass_b
    assert rep.sup_c == pytest.approx(32255.672203876373, rel=1e-9)
    assert not rep.pass_c
    assert rep.as_dict()["M_next"] == 53975


def test_stability_trend_frozen():
    tr = stability_trend((64, 128, 256), 2.62, 0.05, 2.0)
    assert [r.dev_sup for r in tr["reports"]] == pytest.approx(
        [0.9630514513587921, 0.5123942893862391, 0.24807618046557123], rel=1e-9)
    assert tr["slopes_per_log_Mj"] == pytest.approx(
        [-0.9103584796212246, -1.0464711783825908], rel=1e-9)
    assert tr["required_slope"] == pytest.approx(-0.218718400940623, rel=1e-12)
    # the deviation does decay, faster than required — but the handed-off
    # band constants grow, so the chain does not close at these scales
    assert tr["sup_b_sequence"] == sorted(tr["sup_b_sequence"])
    assert tr["sup_c_sequence"] == sorted(tr["sup_c_sequence"])
    assert tr["reports"][2].pass_a  # conclusion (a) alone closes by M=256


def test_hypothesis_display_checks():
    p = StabilityParams(64, 2.62, 0.05, 2.0)
    assert verify_stability_hypotheses(p) == []
    badG = SpectralVector(dense=np.array([3.0 + 0j]), tail_amp=1.0, tail_scale=1.0)
    msgs = verify_stability_hypotheses(p, G=badG)
    assert any("outside [1/2, 2]" in m for m in msgs)
    badF = SpectralVector(dense=np.array([0.9 + 0j]), tail_amp=1.0, tail_scale=1.0)
    msgs = verify_stability_hypotheses(p, F=badF)
    assert any("requires exactly 1" in m for m in msgs)


def test_check_stability_strict_mode_raises():
    p = StabilityParams(64, 2.62, 0.05, 2.0)
    badG = SpectralVector(dense=np.array([3.0 + 0j]), tail_amp=1.0, tail_scale=1.0)
    with pytest.raises(StrictModeError):
        check_stability(p, G=badG, mode="paper-strict")
    rep = check_stability(p, G=badG, mode="desk")
    assert rep.hypothesis_warnings and not rep.synthetic
