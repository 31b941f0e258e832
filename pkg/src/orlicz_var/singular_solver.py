"""Continuation solver for the singular minimization problem.

Minimizes  I(u) = I1(u) - (1-gamma)^-1 * sum_i h^dim |u_i|^(1-gamma)  over
nonnegative grid functions, where I1 is either the fractional modular from
``frac_modular`` (0 < s < 1) or the local limit energy built from the
``psi_limit`` density (s = LOCAL).  The singular exponent sits in
0 < gamma < 1, so the energy is continuous but non-smooth at the cone
boundary; the solver follows a decreasing regularization schedule
(u + eps)^(-gamma), warm-starting each stage from the last, with projected
gradient descent and an Armijo backtracking line search inside each stage.

Certification recomputes, at eps = 0, the nodal weak residual, the energy
identity, and the variational inequality probes; ``uniqueness_probe``,
``limit_study`` and ``coercivity_probe`` wrap multi-solve experiments.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .nfunc import (
    NFunction,
    NonFinite,
    SampledFunction,
    luxemburg_norm,
    sobolev_indices,
)
from .frac_modular import (
    GridDomain,
    GridFunction,
    build_context,
    energy_gradient,
    local_modular,
    modular_I1,
    weak_pairing,
)
from .psi_limit import PsiFunction

__all__ = [
    "LOCAL",
    "DEFAULT_EPS_SCHEDULE",
    "SingularEvaluation",
    "NonConvergence",
    "CertificationFailure",
    "CoerciveByOverflow",
    "MonotonicityWarning",
    "SingularProblem",
    "SolveReport",
    "CertificateSummary",
    "LimitStudy",
    "singular_term",
    "grid_luxemburg_norm",
    "minimize",
    "certify",
    "uniqueness_probe",
    "limit_study",
    "coercivity_probe",
]

# token selecting the local (s = 1 limit) energy instead of a fractional one
LOCAL = "local"

DEFAULT_EPS_SCHEDULE = tuple(10.0 ** -k for k in range(1, 11))

# Armijo sufficient-decrease constant and backtracking factor
ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_TOTAL_ITERATIONS = 100_000
# a start is halved until its energy is finite and below this cap; beyond it
# float64 cannot resolve Armijo decreases against the energy magnitude
START_ENERGY_CAP = 1e8


class SingularEvaluation(ValueError):
    """Singular term evaluated at eps = 0 on a function touching zero."""


class NonConvergence(RuntimeError):
    """Iteration budget exhausted or the line search deadlocked."""


class CertificationFailure(RuntimeError):
    """One or more solution certificates exceeded tolerance."""


class CoerciveByOverflow(RuntimeError):
    """The modular overflowed along the ray: divergence is the coercivity
    mechanism for steep kinds.  Carries the finite prefix in ``energies``
    and the first overflowing scale in ``t_overflow``."""

    def __init__(self, energies, t_overflow):
        super().__init__(
            f"modular overflowed at t = {t_overflow:g}; energies diverge")
        self.energies = tuple(energies)
        self.t_overflow = float(t_overflow)


class MonotonicityWarning(UserWarning):
    """Distance tail of an s-sweep failed to be non-increasing (a mesh-size
    effect: h must shrink as s approaches 1)."""


# ---------------------------------------------------------------------------
# problem and report types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingularProblem:
    """One singular minimization instance.

    ``s`` is either a fractional order in (0,1) or the LOCAL token, in which
    case the energy density is the limit function built from ``nf``.
    ``eps_schedule`` must decrease strictly and end at or below 1e-10.
    ``near_field`` is passed through to the pair context ("midpoint" or
    "gradient"); the s-sweep study uses "gradient" so that its discrete
    energies stay consistent as s approaches 1.
    """

    nf: NFunction
    gamma: float
    s: object
    grid: GridDomain
    eps_schedule: tuple = DEFAULT_EPS_SCHEDULE
    opt_tol: float = 1e-6
    near_field: str = "midpoint"

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0,1)")
        if self.s != LOCAL:
            s = float(self.s)
            if not 0.0 < s < 1.0:
                raise ValueError(f"s must lie in (0,1) or be {LOCAL!r}")
            object.__setattr__(self, "s", s)
        eps = tuple(float(e) for e in self.eps_schedule)
        if not eps or any(e <= 0.0 for e in eps):
            raise ValueError("eps_schedule must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])) and len(eps) > 1:
            raise ValueError("eps_schedule must decrease strictly")
        if eps[-1] > 1e-10:
            raise ValueError("eps_schedule must end at or below 1e-10")
        object.__setattr__(self, "eps_schedule", eps)
        if not self.opt_tol > 0.0:
            raise ValueError("opt_tol must be positive")
        if self.near_field not in ("midpoint", "gradient"):
            raise ValueError("near_field must be 'midpoint' or 'gradient'")

    @property
    def is_local(self) -> bool:
        return self.s == LOCAL


@dataclass(frozen=True)
class SolveReport:
    """Converged minimizer with its certificates at eps = 0.

    ``energy`` is the unregularized value I(u); ``weak_residual`` is the max
    over interior nodes of |g_i - u_i^(-gamma) h^d| / (u_i^(-gamma) h^d)
    with g the modular gradient; ``energy_identity_gap`` is
    |<g, u> - sum u^(1-gamma) h^d| normalized by 1 + sum u^(1-gamma) h^d.
    """

    u: GridFunction
    energy: float
    min_value: float
    weak_residual: float
    energy_identity_gap: float
    iterations: int
    eps_final: float


@dataclass(frozen=True)
class CertificateSummary:
    """Recomputed certificates for a converged report (all within tolerance
    whenever this object is returned rather than CertificationFailure)."""

    weak_residual: float
    energy_identity_gap: float
    inequality_gaps: tuple
    energy: float
    min_value: float


@dataclass(frozen=True)
class LimitStudy:
    """Distances of the s-solutions to the local solution, per s."""

    s_values: tuple
    distances: tuple
    local_report: SolveReport
    s_reports: tuple = field(default=(), repr=False)


# ---------------------------------------------------------------------------
# singular term
# ---------------------------------------------------------------------------

def singular_term(u: GridFunction, gamma: float, eps: float):
    """(value, gradient) of the regularized singular part.

    value = -(1-gamma)^-1 sum_i h^dim ((|u_i|+eps)^(1-gamma) - eps^(1-gamma))
    (the constant is subtracted so the zero function evaluates to 0), and
    gradient_i = -sign(u_i) (|u_i|+eps)^(-gamma) h^dim, matching the
    evenness of the energy in u.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0,1)")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    vals = u.values
    if eps == 0.0 and np.any(vals <= 0.0):
        raise SingularEvaluation(
            "eps = 0 requires u > 0 at every interior node")
    cell = u.grid.h ** u.grid.dim
    om = 1.0 - gamma
    a = np.abs(vals)
    value = -(cell / om) * float(np.sum((a + eps) ** om - eps ** om))
    grad = -np.sign(vals) * (a + eps) ** (-gamma) * cell
    return value, GridFunction(u.grid, grad)


def grid_luxemburg_norm(nf, grid: GridDomain, values) -> float:
    """Discrete Luxemburg norm of nodal values with cell measure h^dim."""
    vals = np.abs(np.asarray(values, dtype=np.float64)).ravel()
    weights = np.full(vals.shape, grid.h ** grid.dim)
    return luxemburg_norm(nf, SampledFunction(vals, weights))


# ---------------------------------------------------------------------------
# energy models (fractional or local) over interior nodal values
# ---------------------------------------------------------------------------

class _NonlocalModel:
    """Fractional modular and its gradient on interior values."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.grid = ctx.grid

    def value(self, vals) -> float:
        try:
            return modular_I1(self.ctx, GridFunction(self.grid, vals))
        except NonFinite:
            return math.inf

    def grad(self, vals):
        return energy_gradient(self.ctx, GridFunction(self.grid, vals)).values

    def pairing(self, u_vals, v_vals) -> float:
        return 2.0 * weak_pairing(self.ctx, GridFunction(self.grid, u_vals),
                                  GridFunction(self.grid, v_vals))


class _LocalModel:
    """Limit energy sum_cells Psi(|grad u|) h^dim and its gradient."""

    def __init__(self, psi, grid: GridDomain):
        self.psi = psi
        self.grid = grid

    def value(self, vals) -> float:
        try:
            return local_modular(self.psi, self.grid, GridFunction(self.grid, vals))
        except NonFinite:
            return math.inf

    def grad(self, vals):
        h = self.grid.h
        if self.grid.dim == 1:
            z = np.concatenate([[0.0], vals, [0.0]])
            e = np.diff(z) / h
            with np.errstate(over="ignore", invalid="ignore"):
                d = self.psi.raw_density(np.abs(e)) * np.sign(e)
            out = d[:-1] - d[1:]
        else:
            n = self.grid.n_interior
            z = np.zeros((n + 2, n + 2))
            z[1:-1, 1:-1] = vals
            gx = (z[1:, :-1] - z[:-1, :-1]) / h
            gy = (z[:-1, 1:] - z[:-1, :-1]) / h
            mag = np.hypot(gx, gy)
            safe = np.where(mag > 0.0, mag, 1.0)
            with np.errstate(over="ignore", invalid="ignore"):
                q = np.where(mag > 0.0, self.psi.raw_density(mag) / safe, 0.0)
            acc = np.zeros_like(z)
            tx = q * gx * h  # d(cell)/d z, x-leg, times h^2 measure over h
            ty = q * gy * h
            acc[1:, :-1] += tx
            acc[:-1, :-1] -= tx
            acc[:-1, 1:] += ty
            acc[:-1, :-1] -= ty
            out = acc[1:-1, 1:-1]
        if not np.all(np.isfinite(out)):
            raise NonFinite("local energy gradient overflowed")
        return out

    def pairing(self, u_vals, v_vals) -> float:
        return float(np.dot(self.grad(u_vals).ravel(),
                            np.asarray(v_vals, dtype=np.float64).ravel()))


def _build_model(problem: SingularProblem):
    if problem.is_local:
        return _LocalModel(PsiFunction(problem.nf, problem.grid.dim), problem.grid)
    ctx = build_context(problem.grid, problem.nf, problem.s,
                        near_field=problem.near_field)
    return _NonlocalModel(ctx)


# ---------------------------------------------------------------------------
# projected descent with eps continuation
# ---------------------------------------------------------------------------

def _cone_singular(gamma: float, cell: float):
    """(value, gradient) callables of the regularized term on the cone.

    On u >= 0 the one-sided derivative at a zero node is -(eps)^(-gamma) h^d
    (not 0), which keeps the origin non-stationary for every eps > 0; away
    from zero this agrees with ``singular_term``.
    """
    def pair(vals, eps):
        om = 1.0 - gamma
        value = -(cell / om) * float(np.sum((vals + eps) ** om - eps ** om))
        grad = -cell * (vals + eps) ** (-gamma)
        return value, grad
    return pair


def _zero_singular(vals, eps):
    """Zero forcing: the sanity configuration whose minimizer is 0."""
    return 0.0, np.zeros_like(vals)


def _rescue_start(model, vals):
    """Halve the start until the modular is finite and moderate."""
    for _ in range(300):
        e = model.value(vals)
        if math.isfinite(e) and e <= START_ENERGY_CAP:
            return vals
        vals = 0.5 * vals
    raise NonFinite("starting point stays outside the effective domain")


def _descend(model, sing, eps_schedule, opt_tol, vals,
             budget=MAX_TOTAL_ITERATIONS, history=None):
    """Projected gradient descent with Armijo backtracking, one pass per eps.

    Stage k stops when ||pg||_2 < max(opt_tol, eps_k) * (1 + |E|), where pg
    is the gradient with ascent components masked on the active set.
    Returns (values, total accepted iterations).
    """
    u = vals
    total = 0
    alpha = None
    for eps in eps_schedule:
        tol = max(opt_tol, eps)
        E = model.value(u) + sing(u, eps)[0]
        g = model.grad(u) + sing(u, eps)[1]
        if history is not None:
            history.append((eps, E))
        prev_u = prev_g = None
        while True:
            pg = np.where(u > 0.0, g, np.minimum(g, 0.0))
            if float(np.linalg.norm(pg.ravel())) < tol * (1.0 + abs(E)):
                break
            if total >= budget:
                raise NonConvergence(
                    f"no convergence within {budget} total iterations "
                    f"(stalled at eps = {eps:g})")
            if prev_u is not None:
                du = (u - prev_u).ravel()
                dg = (g - prev_g).ravel()
                denom = float(np.dot(du, dg))
                if denom > 0.0:
                    alpha = min(max(float(np.dot(du, du)) / denom, 1e-14), 1e14)
            if alpha is None:
                alpha = ((1.0 + float(np.max(u)))
                         / (1.0 + float(np.max(np.abs(g)))))
            a = alpha
            for _ in range(200):
                unew = np.maximum(u - a * g, 0.0)
                enew = model.value(unew) + sing(unew, eps)[0]
                drop = float(np.dot(g.ravel(), (unew - u).ravel()))
                if (math.isfinite(enew) and math.isfinite(drop)
                        and enew <= E + ARMIJO_C * drop):
                    break
                a *= BACKTRACK
            else:
                raise NonConvergence(
                    f"line search deadlocked at eps = {eps:g} (E = {E:g})")
            prev_u, prev_g = u, g
            u, E = unew, enew
            g = model.grad(u) + sing(u, eps)[1]
            alpha = a
            total += 1
            if history is not None:
                history.append((eps, E))
    return u, total


def _solution_residuals(model, grid: GridDomain, gamma: float, vals):
    """(weak residual, normalized identity gap, sum u^(1-gamma) h^d) at eps=0."""
    cell = grid.h ** grid.dim
    g = model.grad(vals).ravel()
    flat = vals.ravel()
    rhs_nodal = flat ** (-gamma) * cell
    weak_residual = float(np.max(np.abs(g - rhs_nodal) / rhs_nodal))
    rhs_int = float(np.sum(flat ** (1.0 - gamma))) * cell
    gap = abs(float(np.dot(g, flat)) - rhs_int) / (1.0 + rhs_int)
    return weak_residual, gap, rhs_int


def minimize(problem: SingularProblem, u0=None, history=None) -> SolveReport:
    """Continuation solve over the eps schedule; reports at eps = 0.

    ``u0`` may be a constant or a GridFunction; the default start is the
    constant 0.1, halved if needed until the modular is finite and moderate.
    ``history``, when a list, receives (eps, energy) per accepted iterate.
    Raises NonConvergence past the total iteration budget and NonFinite when
    no feasible start exists at any amplitude.
    """
    model = _build_model(problem)
    return _minimize_with_model(problem, model, u0=u0, history=history)


def _minimize_with_model(problem, model, u0=None, history=None) -> SolveReport:
    grid = problem.grid
    if u0 is None:
        u0 = 0.1
    if isinstance(u0, GridFunction):
        vals = u0.values.copy()
    elif np.isscalar(u0):
        vals = np.full(grid.interior_shape(), float(u0))
    else:
        vals = np.asarray(u0, dtype=np.float64).reshape(grid.interior_shape())
    vals = _rescue_start(model, np.maximum(vals, 0.0))
    cell = grid.h ** grid.dim
    sing = _cone_singular(problem.gamma, cell)
    vals, iterations = _descend(model, sing, problem.eps_schedule,
                                problem.opt_tol, vals, history=history)
    min_value = float(np.min(vals))
    om = 1.0 - problem.gamma
    energy = (model.value(vals)
              - (cell / om) * float(np.sum(np.abs(vals) ** om)))
    if min_value > 0.0:
        weak_residual, gap, _ = _solution_residuals(
            model, grid, problem.gamma, vals)
    else:  # degenerate outcome; reported honestly, certificates will fail
        weak_residual = math.inf
        gap = math.inf
    return SolveReport(
        u=GridFunction(grid, vals, nonnegative=True),
        energy=energy,
        min_value=min_value,
        weak_residual=weak_residual,
        energy_identity_gap=gap,
        iterations=iterations,
        eps_final=problem.eps_schedule[-1],
    )


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def certify(report: SolveReport, problem: SingularProblem,
            residual_tol: float = 1e-3, identity_tol: float = 1e-5,
            inequality_tol: float = 1e-6, seed: int = 0) -> CertificateSummary:
    """Recompute all solution certificates at eps = 0.

    (a) nodal weak residual <= residual_tol; (b) normalized energy-identity
    gap <= identity_tol; (c) for v in {0, 4u, random nonnegative} and
    w = -2u + (v-u)^+, the operator pairing against w dominates
    sum u^(-gamma) w h^d - inequality_tol.  Also checks negativity of the
    energy and strict positivity.  Raises CertificationFailure naming every
    violated certificate and its margin.
    """
    grid = problem.grid
    vals = report.u.values
    failures = []
    min_value = float(np.min(vals))
    if min_value <= 0.0:
        raise CertificationFailure(
            f"positivity: min interior value {min_value:g} <= 0")
    model = _build_model(problem)
    weak_residual, gap, _ = _solution_residuals(model, grid, problem.gamma, vals)
    if weak_residual > residual_tol:
        failures.append(f"weak residual {weak_residual:.3e} > {residual_tol:g}")
    if gap > identity_tol:
        failures.append(f"energy identity gap {gap:.3e} > {identity_tol:g}")
    cell = grid.h ** grid.dim
    om = 1.0 - problem.gamma
    energy = (model.value(vals)
              - (cell / om) * float(np.sum(vals ** om)))
    if not energy < 0.0:
        failures.append(f"energy {energy:.3e} not negative")
    rng = np.random.default_rng(seed)
    probes = (
        ("v=0", np.zeros_like(vals)),
        ("v=4u", 4.0 * vals),
        ("v=random", rng.uniform(0.0, 2.0 * float(np.max(vals)), vals.shape)),
    )
    gaps = []
    for label, v in probes:
        w = -2.0 * vals + np.maximum(v - vals, 0.0)
        lhs = model.pairing(vals, w)
        rhs = float(np.sum(vals ** (-problem.gamma) * w)) * cell
        ineq_gap = lhs - rhs
        gaps.append((label, ineq_gap))
        if ineq_gap < -inequality_tol:
            failures.append(
                f"inequality ({label}) gap {ineq_gap:.3e} < -{inequality_tol:g}")
    if failures:
        raise CertificationFailure("; ".join(failures))
    return CertificateSummary(
        weak_residual=weak_residual,
        energy_identity_gap=gap,
        inequality_gaps=tuple(gaps),
        energy=energy,
        min_value=min_value,
    )


# ---------------------------------------------------------------------------
# multi-solve experiments
# ---------------------------------------------------------------------------

def uniqueness_probe(problem: SingularProblem, n_starts: int,
                     seed: int = 0) -> float:
    """Max pairwise Luxemburg distance between solves from distinct starts.

    Starts are the constants 0.01, 1, 10 (in that order) and then random
    positive fields; a meaningful probe needs n_starts >= 3.  Returns 0 for
    a single start.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    model = _build_model(problem)
    rng = np.random.default_rng(seed)
    shape = problem.grid.interior_shape()
    starts = [0.01, 1.0, 10.0][:n_starts]
    while len(starts) < n_starts:
        starts.append(rng.uniform(0.05, 5.0, shape))
    solutions = [
        _minimize_with_model(problem, model, u0=s).u.values for s in starts
    ]
    dist = 0.0
    for i, a in enumerate(solutions):
        for b in solutions[i + 1:]:
            dist = max(dist, grid_luxemburg_norm(problem.nf, problem.grid, a - b))
    return dist


def limit_study(nf: NFunction, gamma: float, grid: GridDomain, s_values,
                opt_tol: float = 1e-6,
                eps_schedule: tuple = DEFAULT_EPS_SCHEDULE) -> LimitStudy:
    """Solve the s-family plus the local problem; distances per s.

    Requires a finite upper growth index (the sweep is meaningless past the
    doubling class) and an increasing s grid reaching at least 0.95.  The
    s-problems use the "gradient" near-field completion so that the discrete
    energies stay consistent as s approaches 1 on the fixed lattice; h is
    held fixed across s on purpose, and a non-monotone distance tail is
    reported as a MonotonicityWarning with the lattice parameters rather
    than hidden by per-s remeshing.
    """
    s_values = tuple(float(s) for s in s_values)
    if not s_values or any(not 0.0 < s < 1.0 for s in s_values):
        raise ValueError("s_values must lie in (0,1)")
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise ValueError("s_values must increase strictly")
    if max(s_values) < 0.95:
        raise ValueError("s_values must reach at least 0.95")
    _, m = sobolev_indices(nf, 1e-3, 1e3, 400)
    if not math.isfinite(m):
        raise ValueError(
            "the sweep needs a finite upper growth index (doubling kind)")
    local_problem = SingularProblem(nf, gamma, LOCAL, grid,
                                    eps_schedule=eps_schedule, opt_tol=opt_tol)
    local_report = minimize(local_problem)
    distances = []
    reports = []
    for s in s_values:
        problem = SingularProblem(nf, gamma, s, grid,
                                  eps_schedule=eps_schedule, opt_tol=opt_tol,
                                  near_field="gradient")
        rep = minimize(problem)
        reports.append(rep)
        distances.append(grid_luxemburg_norm(
            nf, grid, rep.u.values - local_report.u.values))
    tail = distances[-3:]
    if any(b > a for a, b in zip(tail, tail[1:])):
        warnings.warn(MonotonicityWarning(
            f"distance tail {tail} is not non-increasing at n_interior = "
            f"{grid.n_interior}, h = {grid.h:g}; refine the lattice to "
            f"follow s closer to 1"))
    return LimitStudy(s_values=s_values, distances=tuple(distances),
                      local_report=local_report, s_reports=tuple(reports))


def coercivity_probe(problem: SingularProblem, ray_u: GridFunction,
                     t_values) -> np.ndarray:
    """Energies along t * ray_u; checks eventual strict growth to > 0.

    Raises CoerciveByOverflow when the modular overflows along the ray (the
    divergence that makes steep kinds coercive) and CertificationFailure when
    the finite energies fail to increase strictly towards a positive value.
    """
    if not np.any(ray_u.values):
        raise ValueError("ray_u must not vanish identically")
    t_values = tuple(float(t) for t in t_values)
    if any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("t_values must increase strictly")
    if t_values[-1] < 1e3:
        raise ValueError("t_values must reach at least 1e3")
    model = _build_model(problem)
    cell = problem.grid.h ** problem.grid.dim
    om = 1.0 - problem.gamma
    energies = []
    for t in t_values:
        vals = t * ray_u.values
        mv = model.value(vals)
        if not math.isfinite(mv):
            raise CoerciveByOverflow(energies, t)
        sv = -(cell / om) * float(np.sum(np.abs(vals) ** om))
        energies.append(mv + sv)
    arr = np.asarray(energies)
    rising = np.flatnonzero(np.diff(arr) <= 0.0)
    tail_start = int(rising[-1]) + 1 if rising.size else 0
    if tail_start >= arr.size - 1 or arr[-1] <= 0.0:
        raise CertificationFailure(
            f"ray energies do not grow to a positive value: tail from index "
            f"{tail_start}, final {arr[-1]:.3e}")
    return arr
