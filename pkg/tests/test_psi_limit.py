"""Tests for the limit density: sphere rules, moments, closed forms, scaling."""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import beta as beta_fn, digamma

from orlicz_var.nfunc import ExpSquare, MaxPower, Power, SumPower, Tabulated
from orlicz_var.psi_limit import (
    PsiFunction,
    SphereMoment,
    UnsupportedKind,
    oracle_nfunction,
    psi_closed_form,
    psi_eval,
    scaled_modular_limit_check,
    sphere_area,
    sphere_moment,
    sphere_rule,
)


def closed_moment(dim, p):
    """Beta-function value of the sphere moment, the independent oracle."""
    if dim == 1:
        return 2.0
    return sphere_area(dim - 1) * float(beta_fn((p + 1) / 2, (dim - 1) / 2))


def closed_log_moment(dim, p):
    """Digamma derivative of the Beta, oracle for the log-weighted moment."""
    if dim == 1:
        return 0.0
    k = closed_moment(dim, p)
    return 0.5 * k * float(digamma((p + dim) / 2) - digamma((p + 1) / 2))


# ---------------------------------------------------------------------------
# sphere rules and moments
# ---------------------------------------------------------------------------

def test_sphere_area_values():
    assert abs(sphere_area(1) - 2.0) < 1e-14
    assert abs(sphere_area(2) - 2.0 * math.pi) < 1e-14
    assert abs(sphere_area(3) - 4.0 * math.pi) < 1e-13
    with pytest.raises(ValueError):
        sphere_area(0)


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_sphere_rule_weights_sum_to_area(dim):
    c, w = sphere_rule(dim, 64)
    assert abs(w.sum() - sphere_area(dim)) < 1e-10 * sphere_area(dim)
    assert np.all(c >= 0.0) and np.all(c <= 1.0)
    # splitting the interval must not change the integral of a smooth function
    c2, w2 = sphere_rule(dim, 64, split=(0.3, 0.7))
    assert abs(np.dot(w2, c2**2) - np.dot(w, c**2)) < 1e-12 * max(np.dot(w, c**2), 1)


@pytest.mark.parametrize("dim,p", [(1, 2.0), (2, 2.0), (2, 2.5), (2, 3.0),
                                   (3, 2.0), (3, 3.5), (3, 4.0)])
def test_sphere_moment_against_beta_digamma(dim, p):
    m = sphere_moment(dim, p)
    k, klog = closed_moment(dim, p), closed_log_moment(dim, p)
    assert abs(m.value - k) <= 1e-9 * k
    assert abs(m.log_value - klog) <= 1e-8 * max(klog, 1e-3)


def test_sphere_moment_examples():
    assert abs(sphere_moment(2, 2.0).value - math.pi) < 1e-10
    assert sphere_moment(1, 3.7) == SphereMoment(1, 3.7, 2.0, 0.0)
    assert abs(sphere_moment(3, 2.0).value - 4.0 * math.pi / 3.0) < 1e-10
    assert abs(sphere_moment(2, 3.0).value - 8.0 / 3.0) < 1e-10
    # log moment of sin^2 over the circle
    ref = math.pi / 2.0 * (2.0 * math.log(2.0) - 1.0)
    assert abs(sphere_moment(2, 2.0).log_value - ref) < 1e-9


@pytest.mark.parametrize("dim,p", [(1, 2.0), (2, 2.0), (3, 3.0)])
def test_sphere_moment_invariants(dim, p):
    m = sphere_moment(dim, p)
    assert 0.0 < m.value <= sphere_area(dim) + 1e-12
    assert m.log_value >= 0.0


def test_sphere_moment_preconditions():
    with pytest.raises(ValueError):
        sphere_moment(0, 2.0)
    with pytest.raises(ValueError):
        sphere_moment(2, 0.0)


# ---------------------------------------------------------------------------
# psi_eval against the closed forms
# ---------------------------------------------------------------------------

ORACLE_CASES = [
    ("power", dict(p=2.0)),
    ("power", dict(p=3.0)),
    ("powerlog", dict(p=2.0)),
    ("maxpower", dict(p=4.0, q=2.0)),
    ("sumpower", dict(p=2.0, q=3.0)),
]


def test_psi_eval_at_zero():
    psi = PsiFunction(Power(2.0), 2)
    assert psi_eval(psi, 0.0) == 0.0


def test_psi_eval_power_example():
    psi = PsiFunction(oracle_nfunction("power", p=2.0), 2)
    assert abs(psi_eval(psi, 3.0) - math.pi * 9.0 / 2.0) < 1e-10 * math.pi * 4.5


def test_psi_eval_sumpower_example():
    psi = PsiFunction(oracle_nfunction("sumpower", p=2.0, q=3.0), 2)
    ref = math.pi / 2.0 + (8.0 / 3.0) / 3.0
    assert abs(psi_eval(psi, 1.0) - ref) < 1e-10 * ref


@pytest.mark.parametrize("kind,params", ORACLE_CASES)
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_oracle_agreement(kind, params, dim):
    base = oracle_nfunction(kind, **params)
    psi = PsiFunction(base, dim)
    for t in (0.25, 1.0, 4.0):
        qv = psi_eval(psi, t)
        cv = psi_closed_form(kind, dim, t, **params)
        assert abs(qv - cv) <= 1e-6 * (1.0 + abs(cv))


def test_closed_form_pinned_values():
    assert abs(psi_closed_form("power", 2, 1.0, p=2.0) - math.pi / 2.0) < 1e-10
    val = psi_closed_form("maxpower", 2, 0.5, p=4.0, q=2.0)
    assert abs(val - math.pi / 8.0) < 1e-10
    klog = math.pi / 2.0 * (2.0 * math.log(2.0) - 1.0)
    ref = (klog + math.pi / 2.0) / 2.0
    assert abs(psi_closed_form("powerlog", 2, 1.0, p=2.0) - ref) < 1e-9


def test_closed_form_unsupported_kind():
    with pytest.raises(UnsupportedKind):
        psi_closed_form("expsquare", 2, 1.0)
    with pytest.raises(UnsupportedKind):
        oracle_nfunction("expsquare")


@pytest.mark.parametrize("kind,params", [("maxpower", dict(p=4.0, q=2.0)),
                                         ("powerlog", dict(p=2.0))])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_closed_form_continuity_at_one(kind, params, dim):
    below = psi_closed_form(kind, dim, 1.0 - 1e-9, **params)
    above = psi_closed_form(kind, dim, 1.0 + 1e-9, **params)
    assert abs(above - below) < 1e-7


# ---------------------------------------------------------------------------
# PsiFunction invariants
# ---------------------------------------------------------------------------

BASES = [
    (Power(2.0), 2),
    (MaxPower(2.0, 4.0), 3),
    (SumPower(2.0, 3.0), 2),
    (ExpSquare(), 1),
]


@pytest.mark.parametrize("base,dim", BASES)
def test_psi_monotone_convex(base, dim):
    psi = PsiFunction(base, dim)
    ts = np.linspace(0.0, 3.0, 41)
    vals = psi.raw_value(ts)
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) > 0.0)
    assert np.all(np.diff(vals, 2) > 0.0)


@pytest.mark.parametrize("base,dim", BASES)
def test_psi_upper_bound(base, dim):
    area = sphere_area(dim)
    psi = PsiFunction(base, dim)
    for t in (0.5, 2.0):
        lhs = psi_eval(psi, t)

        def radial(tau, t=t):
            return float(base.raw_value(np.float64(t * math.exp(-tau))))

        rhs, _ = quad(radial, 0.0, 80.0, epsabs=0.0, epsrel=1e-10, limit=300)
        assert lhs <= area * rhs + 1e-8


@pytest.mark.parametrize("base,dim", BASES)
def test_psi_derivative_bound(base, dim):
    area = sphere_area(dim)
    psi = PsiFunction(base, dim)
    for t in (0.5, 1.5):
        h = 1e-6 * t
        diff = (psi.raw_value(t + h) - psi.raw_value(t - h)) / (2.0 * h)
        bound = area * float(base.raw_value(np.float64(t))) / t
        assert 0.0 < diff <= bound + 1e-6
        # the analytic density agrees with the numerical slope
        assert abs(float(psi.raw_density(np.float64(t))) - diff) < 1e-5 * max(diff, 1.0)


def test_psi_equivalence_band_for_finite_upper_index():
    knots = np.geomspace(1e-4, 1e4, 200)
    bases = [
        Power(3.0),
        MaxPower(2.0, 4.0),
        SumPower(2.0, 3.0),
        Tabulated(np.column_stack([knots, np.sqrt(knots)])),
    ]
    for base in bases:
        psi = PsiFunction(base, 2)
        ts = np.geomspace(1e-2, 1e2, 12)
        ratio = psi.raw_value(ts) / base.raw_value(ts)
        k1, k2 = float(ratio.min()), float(ratio.max())
        assert 0.0 < k1 <= k2 < math.inf


def test_psi_fast_path_matches_quadrature():
    for base, dim in [(Power(2.5), 2), (ExpSquare(), 3)]:
        psi = PsiFunction(base, dim)
        for t in (0.3, 1.7):
            fast = float(psi.raw_value(np.float64(t)))
            slow = psi_eval(psi, t)
            assert abs(fast - slow) <= 1e-8 * (1.0 + abs(slow))


# ---------------------------------------------------------------------------
# the (1-s)-scaled modular
# ---------------------------------------------------------------------------

def test_scaled_limit_power_tolerance():
    errs = scaled_modular_limit_check(
        oracle_nfunction("power", p=2.0), 2, 1.0,
        [0.5, 0.7, 0.9, 0.95, 0.99, 0.999])
    assert np.all(errs <= 1e-4)
    # the s = 0.99 entry sits within 0.02 of the exact value pi/2
    assert errs[4] <= 0.02
    psi = PsiFunction(oracle_nfunction("power", p=2.0), 2)
    assert abs(psi_eval(psi, 1.0) - math.pi / 2.0) < 1e-10


def test_scaled_limit_zero_t():
    errs = scaled_modular_limit_check(Power(2.0), 2, 0.0, [0.5, 0.9])
    assert np.all(errs == 0.0)


def test_scaled_limit_expsquare_decreasing():
    errs = scaled_modular_limit_check(ExpSquare(), 1, 0.5, [0.9, 0.99, 0.999])
    assert np.all(np.diff(errs) < 0.0)
    assert errs[-1] < 1e-10


def test_scaled_limit_preconditions():
    with pytest.raises(ValueError):
        scaled_modular_limit_check(Power(2.0), 2, 1.0, [0.9, 0.5])
    with pytest.raises(ValueError):
        scaled_modular_limit_check(Power(2.0), 2, 1.0, [0.5, 1.5])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
