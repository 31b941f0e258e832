"""Tests for the N-function kinds, conjugation, indices, and Luxemburg norms."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from orlicz_var import nfunc
from orlicz_var.nfunc import (
    BracketFailure,
    ConjugateView,
    ExpSquare,
    MaxPower,
    NonFinite,
    Power,
    PowerLog,
    SampledFunction,
    SumPower,
    Tabulated,
    biconjugate_check,
    conjugate_eval,
    delta2_classify,
    holder_check,
    luxemburg_norm,
    modular_rho,
    nfunction_from_dict,
    nfunction_to_dict,
    phi_eval,
    Phi_eval,
    sobolev_indices,
)


def make_tabulated():
    ts = np.geomspace(1e-4, 1e4, 200)
    return Tabulated(np.c_[ts, np.sqrt(ts)])


def genuine_kinds():
    return [Power(3), MaxPower(2, 4), SumPower(2, 3), ExpSquare(), make_tabulated()]


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_phi_eval_examples():
    assert phi_eval(Power(2), 3.0) == pytest.approx(1.0)
    assert phi_eval(ExpSquare(), 1.0) == pytest.approx(math.e)
    # table generated from phi(t) = sqrt(t); interpolation must return it
    assert phi_eval(make_tabulated(), 4.0) == pytest.approx(2.0, abs=1e-6)


def test_Phi_eval_examples():
    assert Phi_eval(Power(3), 2.0) == pytest.approx(8.0 / 3.0)
    assert Phi_eval(ExpSquare(), 0.0) == 0.0
    # quadrature of the density is an independent route to Phi
    mp = MaxPower(2, 4)
    q, _ = quad(lambda t: float(mp.raw_density(np.float64(t))), 0.0, 1.5, points=[1.0])
    assert Phi_eval(mp, 1.5) == pytest.approx(q, abs=1e-8)
    tab = make_tabulated()
    q, _ = quad(lambda t: t * math.sqrt(t), 0.0, 4.0)
    assert Phi_eval(tab, 4.0) == pytest.approx(q, rel=1e-8)
    assert Phi_eval(tab, 4.0) == pytest.approx(4.0 ** 2.5 / 2.5, rel=1e-12)


def test_Phi_even_zero_monotone():
    ts = np.geomspace(1e-3, 5.0, 60)
    for k in genuine_kinds():
        assert Phi_eval(k, 0.0) == 0.0
        assert np.allclose(k.value(ts), k.value(-ts))
        vals = k.value(ts)
        assert np.all(np.diff(vals) > 0)
        dens = k.density(ts)
        assert np.all(np.diff(dens) > 0), k.kind
        # (phi_2) limits on log-spaced samples
        assert k.density(np.float64(1e-8)) < 1e-6
        assert k.density(np.float64(25.0 if k.kind == "expsquare" else 1e8)) > 1e6


def test_Phi_convex_midpoint():
    ts = np.linspace(0.0, 3.0, 41)
    for k in genuine_kinds():
        v = k.value(ts)
        mid = k.value(0.5 * (ts[:-1] + ts[1:]))
        assert np.all(mid <= 0.5 * (v[:-1] + v[1:]) + 1e-12), k.kind


def test_powerlog_is_literal():
    pl = PowerLog(2)
    assert Phi_eval(pl, 1.0) == 0.0
    t = np.array([0.25, 0.5, 0.8, 1.5, 3.0])
    assert np.allclose(pl.value(t), t ** 2 * np.abs(np.log(t)))
    # a.e. derivative, right limit at the jump
    assert float(pl.raw_density(np.float64(1.0))) == 1.0
    assert float(pl.raw_density(np.float64(0.9))) < 0  # dips below zero before 1
    assert not pl.is_nfunction
    with pytest.raises(ValueError):
        ConjugateView(pl)


def test_nonfinite_policy():
    with pytest.raises(NonFinite):
        Phi_eval(ExpSquare(), 30.0)  # 30^2 > 700 threshold
    u = SampledFunction.on_interval(np.full(8, 30.0), 1.0)
    with pytest.raises(NonFinite):
        modular_rho(ExpSquare(), u)


# ---------------------------------------------------------------------------
# conjugation
# ---------------------------------------------------------------------------

def test_conjugate_examples():
    assert conjugate_eval(Power(2), 5.0) == pytest.approx(12.5)
    for k in genuine_kinds():
        assert conjugate_eval(k, 0.0) == 0.0
    # oracle frozen from a brute-force grid sup of s*t - t^3/3 (2e6 points)
    assert conjugate_eval(Power(3), 1.0) == pytest.approx(2.0 / 3.0, abs=1e-9)


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
def test_conjugate_power_closed_form(p):
    # conjugate of t^p/p is s^p'/p' with 1/p + 1/p' = 1
    pc = p / (p - 1.0)
    s = np.geomspace(1e-2, 1e2, 25)
    got = conjugate_eval(Power(p), s)
    assert np.allclose(got, s ** pc / pc, rtol=1e-10)


def test_conjugate_maxpower_corner():
    # the corner of max{t^2, t^4} at t=1 maps to the affine piece s - 1
    mp = MaxPower(2, 4)
    for s in (2.5, 3.0, 3.9):
        assert conjugate_eval(mp, s) == pytest.approx(s - 1.0, rel=1e-9)


def test_young_gap_and_equality_curve():
    rng = np.random.default_rng(20240817)
    for k in genuine_kinds():
        s = rng.uniform(0.0, 10.0, 400)
        t = rng.uniform(0.0, 10.0, 400)
        if k.kind == "expsquare":
            t = np.minimum(t, 20.0)
        Phi_t = k.value(t)
        conj_s = conjugate_eval(k, s)
        gap = Phi_t + conj_s - s * t
        assert np.all(gap >= -1e-9 * (1.0 + Phi_t + conj_s)), k.kind
        # equality branch s = t*phi(t)
        tt = np.geomspace(1e-2, 5.0, 50)
        ss = k.density(tt)
        keep = ss <= 10.0
        tt, ss = tt[keep], ss[keep]
        gap_eq = k.value(tt) + conjugate_eval(k, ss) - ss * tt
        assert np.all(np.abs(gap_eq) <= 1e-7 * (1.0 + ss * tt)), k.kind


def test_biconjugate_all_kinds():
    for k in genuine_kinds():
        ts = np.geomspace(1e-2, 1e2, 40)
        if k.kind == "expsquare":
            # Phi itself overflows float64 past t ~ 26.5; check where representable
            ts = ts[ts <= 20.0]
        assert biconjugate_check(k, ts) <= 1e-6, k.kind
    assert biconjugate_check(Power(2), np.array([0.0])) == 0.0


def test_bracket_failure_surface():
    class BoundedDensity(Power):
        def raw_density(self, t):
            return np.minimum(super().raw_density(t), 1.0)

    with pytest.raises(BracketFailure):
        conjugate_eval(BoundedDensity(2), 2.0)


# ---------------------------------------------------------------------------
# indices and classification
# ---------------------------------------------------------------------------

def test_sobolev_indices():
    ell, m = sobolev_indices(ExpSquare(), 1e-3, 10.0, 400)
    assert ell == pytest.approx(2.0, abs=1e-3)
    assert math.isinf(m)
    ell, m = sobolev_indices(Power(4), 1e-2, 1e2, 100)
    assert ell == pytest.approx(4.0, abs=1e-9)
    assert m == pytest.approx(4.0, abs=1e-9)
    ell, m = sobolev_indices(SumPower(2, 3), 1e-4, 1e2, 400)
    assert ell == pytest.approx(2.0, abs=1e-3)
    assert m == pytest.approx(3.0, abs=1e-3)
    ell, m = sobolev_indices(MaxPower(2, 4), 1e-3, 10.0, 400)
    assert (ell, m) == (2.0, 4.0)
    ell, m = sobolev_indices(make_tabulated(), 1e-2, 1e2, 100)
    assert ell == pytest.approx(2.5, abs=1e-6)
    assert m == pytest.approx(2.5, abs=1e-6)


def test_delta2_classify():
    assert delta2_classify(Power(2)) == {"phi_delta2": True, "conj_delta2": True}
    assert delta2_classify(ExpSquare()) == {"phi_delta2": False, "conj_delta2": True}


# ---------------------------------------------------------------------------
# difference lemma (quotient form; see notes on the printed inequality)
# ---------------------------------------------------------------------------

def test_difference_quotient_bound():
    rng = np.random.default_rng(7)
    for k in genuine_kinds():
        hi = 3.0 if k.kind == "expsquare" else 50.0
        a = rng.uniform(0.0, hi, 300)
        b = rng.uniform(0.0, hi, 300)
        keep = np.abs(a - b) > 1e-9
        a, b = a[keep], b[keep]
        quot = (k.value(a) - k.value(b)) / (a - b)
        bound = k.density(a) + k.density(b)
        assert np.all(quot <= bound + 1e-10), k.kind


def test_density_convex_combination_bound():
    rng = np.random.default_rng(8)
    for k in genuine_kinds():
        hi = 3.0 if k.kind == "expsquare" else 50.0
        a = rng.uniform(0.0, hi, 200)
        b = rng.uniform(0.0, hi, 200)
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            c = (1 - t) * a + t * b
            assert np.all(k.density(c) <= k.density(a) + k.density(b) + 1e-10), k.kind


# ---------------------------------------------------------------------------
# modulars and norms
# ---------------------------------------------------------------------------

def test_modular_examples():
    assert modular_rho(Power(2), SampledFunction.on_interval(np.zeros(16), 2.0)) == 0.0
    u = SampledFunction.on_interval(np.ones(16), 2.0)
    assert modular_rho(Power(2), u) == pytest.approx(1.0)
    n = 10 ** 4
    x = (np.arange(n) + 0.5) / n
    u = SampledFunction.on_interval(x, 1.0)
    assert modular_rho(Power(3), u) == pytest.approx(1.0 / 12.0, abs=1e-6)


def test_luxemburg_examples():
    zero = SampledFunction.on_interval(np.zeros(8), 1.0)
    assert luxemburg_norm(Power(2), zero) == 0.0
    c = 3.0
    u = SampledFunction.on_interval(np.full(32, c), 1.0)
    assert luxemburg_norm(Power(2), u) == pytest.approx(c / math.sqrt(2), rel=1e-9)
    one = SampledFunction.on_interval(np.ones(32), 1.0)
    assert luxemburg_norm(ExpSquare(), one) == pytest.approx(
        1.0 / math.sqrt(math.log(3.0)), rel=1e-9)


def test_luxemburg_homogeneity():
    rng = np.random.default_rng(99)
    vals = rng.uniform(0.1, 2.0, 64)
    u = SampledFunction.on_interval(vals, 1.0)
    base = luxemburg_norm(SumPower(2, 3), u)
    for c in (-2.0, 0.5, 3.0):
        cu = SampledFunction.on_interval(c * vals, 1.0)
        assert luxemburg_norm(SumPower(2, 3), cu) == pytest.approx(
            abs(c) * base, rel=1e-9)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_norm_modular_consistency_power(p):
    # for Power(p) the modular equals the norm to the p-th power
    rng = np.random.default_rng(123)
    vals = rng.uniform(0.0, 3.0, 128)
    u = SampledFunction.on_interval(vals, 1.0)
    nrm = luxemburg_norm(Power(p), u)
    assert modular_rho(Power(p), u) == pytest.approx(nrm ** p, rel=1e-8)


def test_holder_exact_quadratic_case():
    one = SampledFunction.on_interval(np.ones(32), 1.0)
    assert abs(holder_check(Power(2), one, one)) <= 1e-8


def test_holder_random_draws():
    rng = np.random.default_rng(2718)
    nf = Power(3)
    for _ in range(30):
        u = SampledFunction.on_interval(rng.uniform(0, 1, 512), 1.0)
        v = SampledFunction.on_interval(rng.uniform(0, 1, 512), 1.0)
        assert holder_check(nf, u, v) >= -1e-8
    assert holder_check(nf, SampledFunction.on_interval(np.zeros(8), 1.0),
                        SampledFunction.on_interval(np.ones(8), 1.0)) == 0.0


# ---------------------------------------------------------------------------
# construction and serialization
# ---------------------------------------------------------------------------

def test_json_round_trip():
    for k in [Power(2.5), PowerLog(2), MaxPower(2, 4), SumPower(2, 3), ExpSquare(),
              make_tabulated()]:
        d = nfunction_to_dict(k)
        k2 = nfunction_from_dict(d)
        ts = np.geomspace(0.1, 3.0, 9)
        assert np.allclose(k.value(ts), k2.value(ts))


def test_construction_errors():
    with pytest.raises(ValueError):
        nfunction_from_dict({"kind": "nope"})
    with pytest.raises(ValueError):
        nfunction_from_dict({"kind": "power"})
    with pytest.raises(ValueError):
        nfunction_from_dict([1, 2, 3])
    with pytest.raises(ValueError):
        Power(1.0)
    with pytest.raises(ValueError):
        Tabulated([[1.0, 1.0]])
    with pytest.raises(ValueError):
        Tabulated([[1.0, 1.0], [0.5, 2.0]])
    with pytest.raises(ValueError):
        # t*phi decreasing
        Tabulated([[1.0, 1.0], [2.0, 0.1]])


def test_scaled_wrapper():
    base = Power(2)
    sc = nfunc.Scaled(base, 2.0)
    ts = np.geomspace(0.1, 4.0, 9)
    assert np.allclose(sc.value(ts), ts ** 2)
    assert np.allclose(sc.raw_density(ts), 2.0 * ts)
    assert sc.kind == "power"
    # scaling does not move the growth indices
    assert sobolev_indices(sc, 1e-2, 1e2, 64) == (2.0, 2.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
