"""Hot pair-sum kernels: compiled with numba, with a pure-numpy fallback.

The compiled path handles the kinds that reduce to a (p, q, scale) parameter
triple (power, maxpower, sumpower, expsquare, and scaled wrappers of them);
everything else, a missing numba, or the environment flag
``ORLICZ_VAR_PURE_NUMPY=1`` selects the vectorized numpy path.  Both paths
accumulate in a fixed order so results are reproducible; overflow is
propagated as inf and turned into NonFinite by the callers.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


_CHUNK = 1 << 22
_EXP_OVERFLOW = 700.0


def use_compiled(kernel_id: int) -> bool:
    """True when the compiled path applies to this kind right now."""
    if kernel_id < 0 or not HAS_NUMBA:
        return False
    return os.environ.get("ORLICZ_VAR_PURE_NUMPY", "0") != "1"


# ---------------------------------------------------------------------------
# compiled path
# ---------------------------------------------------------------------------

@njit(cache=True)
def _phi_scalar(kid, p, q, scale, t):
    # kid 0: t^p/p; 2: max{t^p, t^q} (p >= q); 3: t^p + t^q; 4: (e^(t^2)-1)/2
    if kid == 0:
        return scale * t ** p / p
    if kid == 2:
        if t <= 1.0:
            return scale * t ** q
        return scale * t ** p
    if kid == 3:
        return scale * (t ** p + t ** q)
    x = t * t
    if x > _EXP_OVERFLOW:
        return math.inf
    return scale * 0.5 * math.expm1(x)


@njit(cache=True)
def _density_scalar(kid, p, q, scale, t):
    # derivative of _phi_scalar; the maxpower branch is right-continuous at 1
    if kid == 0:
        return scale * t ** (p - 1.0)
    if kid == 2:
        if t < 1.0:
            return scale * q * t ** (q - 1.0)
        return scale * p * t ** (p - 1.0)
    if kid == 3:
        return scale * (p * t ** (p - 1.0) + q * t ** (q - 1.0))
    x = t * t
    if x > _EXP_OVERFLOW:
        return math.inf
    return scale * t * math.exp(x)


@njit(cache=True)
def pair_modular_c(z, ia, ib, w, tau, kid, p, q, scale):
    total = 0.0
    for k in range(ia.shape[0]):
        delta = abs(z[ia[k]] - z[ib[k]]) * tau[k]
        total += 2.0 * w[k] * _phi_scalar(kid, p, q, scale, delta)
    return total


@njit(cache=True)
def pair_pairing_c(zu, zv, ia, ib, w, tau, kid, p, q, scale):
    total = 0.0
    for k in range(ia.shape[0]):
        du = zu[ia[k]] - zu[ib[k]]
        if du == 0.0:
            continue
        dv = zv[ia[k]] - zv[ib[k]]
        g = _density_scalar(kid, p, q, scale, abs(du) * tau[k])
        term = w[k] * g * dv * tau[k]
        if du < 0.0:
            term = -term
        total += term
    return total


@njit(cache=True)
def pair_gradient_c(z, ia, ib, w, tau, kid, p, q, scale, out):
    for k in range(ia.shape[0]):
        du = z[ia[k]] - z[ib[k]]
        if du == 0.0:
            continue
        g = _density_scalar(kid, p, q, scale, abs(du) * tau[k])
        term = 2.0 * w[k] * g * tau[k]
        if du < 0.0:
            term = -term
        out[ia[k]] += term
        out[ib[k]] -= term


# ---------------------------------------------------------------------------
# numpy fallback (chunked to bound temporary memory)
# ---------------------------------------------------------------------------

def pair_modular_np(nf, z, ia, ib, w, tau):
    total = 0.0
    for lo in range(0, ia.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        delta = np.abs(z[ia[sl]] - z[ib[sl]]) * tau[sl]
        with np.errstate(over="ignore", invalid="ignore"):
            total += float(np.dot(2.0 * w[sl], nf.raw_value(delta)))
    return total


def pair_pairing_np(nf, zu, zv, ia, ib, w, tau):
    total = 0.0
    for lo in range(0, ia.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        du = zu[ia[sl]] - zu[ib[sl]]
        dv = zv[ia[sl]] - zv[ib[sl]]
        with np.errstate(over="ignore", invalid="ignore"):
            g = nf.raw_density(np.abs(du) * tau[sl])
            total += float(np.dot(w[sl] * np.sign(du), g * dv * tau[sl]))
    return total


def pair_gradient_np(nf, z, ia, ib, w, tau, out):
    for lo in range(0, ia.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        du = z[ia[sl]] - z[ib[sl]]
        with np.errstate(over="ignore", invalid="ignore"):
            g = nf.raw_density(np.abs(du) * tau[sl])
            term = 2.0 * w[sl] * g * tau[sl] * np.sign(du)
        np.add.at(out, ia[sl], term)
        np.subtract.at(out, ib[sl], term)
