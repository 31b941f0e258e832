"""Independent two-point boundary-value reference for the local quadratic case.

For the 1-D problem -u'' = u^(-gamma), u(0) = u(1) = 0, the solution is a
symmetric arch; shooting from the left with slope b uses the series start
u(x) ~ b x - b^(-gamma) x^(2-gamma) / ((1-gamma)(2-gamma)) to step over the
integrable singularity at the origin, integrates to the midpoint, and solves
u'(1/2) = 0 for b.  This route shares no code with the descent solver: it is
the oracle the solver is measured against.

For gamma = 1/2 the first integral u'^2/2 + 2 sqrt(u) = const gives closed
values u(1/2) = (3/8)^(4/3) and b = 3^(1/3), pinning the oracle itself.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

__all__ = ["ShootingSolution", "shooting_reference"]


class ShootingSolution:
    """Dense symmetric solution of -u'' = u^(-gamma) on (0,1)."""

    def __init__(self, gamma: float, b: float, ivp):
        self.gamma = float(gamma)
        self.b = float(b)
        self.midpoint_value = float(ivp.y[0][-1])
        self._ivp = ivp
        self._x0 = float(ivp.t[0])

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        xm = np.minimum(x, 1.0 - x)
        out = np.empty_like(xm)
        near = xm < self._x0
        out[~near] = self._ivp.sol(xm[~near])[0]
        out[near] = xm[near] * self.b  # below the series start, linear lead
        return out


def _shoot(gamma: float, b: float, x0: float = 1e-8):
    c = b ** (-gamma) / ((1.0 - gamma) * (2.0 - gamma))
    u0 = b * x0 - c * x0 ** (2.0 - gamma)
    du0 = b - c * (2.0 - gamma) * x0 ** (1.0 - gamma)

    def rhs(_, y):
        return [y[1], -abs(y[0]) ** (-gamma)]

    return solve_ivp(rhs, (x0, 0.5), [u0, du0], rtol=1e-12, atol=1e-14,
                     dense_output=True)


def shooting_reference(gamma: float, b_lo: float = 0.3,
                       b_hi: float = 5.0) -> ShootingSolution:
    """Solve the boundary-value problem by bisection on the launch slope."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0,1)")
    b = brentq(lambda bb: _shoot(gamma, bb).y[1][-1], b_lo, b_hi,
               xtol=1e-13, rtol=1e-15)
    return ShootingSolution(gamma, b, _shoot(gamma, b))
