"""Viscosity-regularized solves of -lap(Phi(u)) + u = f with Dirichlet data.

Per epsilon the construction follows the fixed-point route: harmonic lift of
the boundary data, truncation of the regularized nonlinearity to the data
bounds [m, M], and a damped fixed-point iteration over symmetric
positive-definite flux-form finite-difference solves.  Families of solves
assemble into generalized solutions whose norm nets stay of polynomial
growth, with a weak-residual check for the vanishing-viscosity limit and a
non-positivity check for the obstacle variant.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import (GenAlgError, GridMismatchError, LinearSolveError,
                     MaxPrincipleViolation, NotWeaklySolvable, PicardStalled,
                     PreconditionError)
from .grid_domain import (BoundaryData, Domain, GeneralizedGridFunction,
                          GridFunction, TestFunctionH20, gen_leq, norm,
                          positive_part)
from .nonlinearity import PhiSpec, TruncatedPhi, truncate
from .scale_ring import (DEFAULT_K_MAX, DEFAULT_TOL, RealNet, ViscosityScale,
                         classify_net, tends_to_zero)


# ---------------------------------------------------------------------------
# assembly and conjugate gradient
# ---------------------------------------------------------------------------

def _edge_means(a: np.ndarray, axis: int = 0) -> np.ndarray:
    lo = np.moveaxis(a, axis, 0)
    return np.moveaxis(0.5 * (lo[:-1] + lo[1:]), 0, axis)


def assemble_system(domain: Domain, a_nodal: np.ndarray, reaction: float,
                    rhs_full: np.ndarray, bc_full: np.ndarray):
    """SPD system for the interior unknowns of -div(a grad w) + reaction*w =
    rhs with w = bc on the boundary.  Flux form: the coefficient enters at
    cell midpoints as the mean of the adjacent nodal values, which keeps the
    matrix symmetric with nonpositive off-diagonal entries."""
    n = domain.n
    if domain.dimension == 1:
        h = domain.h[0]
        ae = _edge_means(a_nodal)
        main = (ae[:-1] + ae[1:]) / h ** 2 + reaction
        off = -ae[1:-1] / h ** 2
        A = sparse.diags([off, main, off], (-1, 0, 1), format="csr")
        b = rhs_full[1:-1].copy()
        b[0] += ae[0] * bc_full[0] / h ** 2
        b[-1] += ae[-1] * bc_full[-1] / h ** 2
        return A, b
    hx, hy = domain.h
    aex = _edge_means(a_nodal, axis=0)
    aey = _edge_means(a_nodal, axis=1)
    idx = np.arange(n * n).reshape(n, n)
    # edge coefficients around interior node (i, j), 1-based in the full grid
    west = aex[0:n, 1:n + 1] / hx ** 2
    east = aex[1:n + 1, 1:n + 1] / hx ** 2
    south = aey[1:n + 1, 0:n] / hy ** 2
    north = aey[1:n + 1, 1:n + 1] / hy ** 2
    diag = (west + east + south + north + reaction).ravel()
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    data = [diag]
    rows.append(idx[1:, :].ravel());  cols.append(idx[:-1, :].ravel())
    data.append(-west[1:, :].ravel())
    rows.append(idx[:-1, :].ravel()); cols.append(idx[1:, :].ravel())
    data.append(-east[:-1, :].ravel())
    rows.append(idx[:, 1:].ravel());  cols.append(idx[:, :-1].ravel())
    data.append(-south[:, 1:].ravel())
    rows.append(idx[:, :-1].ravel()); cols.append(idx[:, 1:].ravel())
    data.append(-north[:, :-1].ravel())
    A = sparse.csr_matrix((np.concatenate(data),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n * n, n * n))
    b = rhs_full[1:-1, 1:-1].copy()
    b[0, :] += west[0, :] * bc_full[0, 1:-1]
    b[-1, :] += east[-1, :] * bc_full[-1, 1:-1]
    b[:, 0] += south[:, 0] * bc_full[1:-1, 0]
    b[:, -1] += north[:, -1] * bc_full[1:-1, -1]
    return A, b.ravel()


def apply_elliptic(domain: Domain, a_nodal: np.ndarray, w_full: np.ndarray) -> np.ndarray:
    """-div(a grad w) at interior nodes for a full-grid w, using the same
    midpoint edge coefficients as the assembled matrix."""
    if domain.dimension == 1:
        h = domain.h[0]
        flux = _edge_means(a_nodal) * np.diff(w_full) / h
        return -np.diff(flux) / h
    hx, hy = domain.h
    fx = _edge_means(a_nodal, axis=0) * np.diff(w_full, axis=0) / hx
    fy = _edge_means(a_nodal, axis=1) * np.diff(w_full, axis=1) / hy
    part_x = -np.diff(fx, axis=0) / hx
    part_y = -np.diff(fy, axis=1) / hy
    return part_x[:, 1:-1] + part_y[1:-1, :]


def conjugate_gradient(A, b: np.ndarray, tol: float = 1e-10,
                       max_iter: int | None = None,
                       x0: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Jacobi-preconditioned CG to relative residual tol.  Returns the
    solution and the iteration count; raises LinearSolveError at the cap."""
    nun = b.size
    if max_iter is None:
        max_iter = max(1000, 4 * nun)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    dinv = 1.0 / A.diagonal()
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - A @ x
    if np.linalg.norm(r) <= tol * bnorm:
        return x, 0
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, k
        z = dinv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rel = float(np.linalg.norm(r) / bnorm)
    raise LinearSolveError(
        f"conjugate gradient stalled at relative residual {rel:.3e} "
        f"after {max_iter} iterations", max_iter, rel)


# ---------------------------------------------------------------------------
# linear problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearEllipticProblem:
    """-div(a grad w) + w = rhs in the domain, w = dirichlet on the boundary,
    with a strictly positive nodal coefficient."""

    domain: Domain
    a: GridFunction
    rhs: GridFunction
    dirichlet: BoundaryData

    def __post_init__(self):
        if float(np.min(self.a.values)) <= 0.0:
            raise ValueError("coefficient must be strictly positive")


def _solve_interior(domain: Domain, a_nodal, reaction, rhs_full, bc_full,
                    tol, max_iter) -> tuple[GridFunction, int]:
    A, b = assemble_system(domain, a_nodal, reaction, rhs_full, bc_full)
    x, iters = conjugate_gradient(A, b, tol=tol, max_iter=max_iter)
    full = bc_full.copy()
    if domain.dimension == 1:
        full[1:-1] = x
    else:
        full[1:-1, 1:-1] = x.reshape(domain.n, domain.n)
    return GridFunction(domain, full), iters


def linear_solve(p: LinearEllipticProblem, tol: float = 1e-10,
                 max_iter: int | None = None) -> GridFunction:
    u, _ = _solve_interior(p.domain, p.a.values, 1.0, p.rhs.values,
                           p.dirichlet.to_full(), tol, max_iter)
    return u


def harmonic_lift(g: BoundaryData, domain: Domain, tol: float = 1e-12,
                  max_iter: int | None = None) -> GridFunction:
    """Discrete-harmonic extension of the boundary data (zero right side,
    unit coefficient, no reaction)."""
    w0, _ = _solve_interior(domain, np.ones(domain.shape), 0.0,
                            np.zeros(domain.shape), g.to_full(), tol, max_iter)
    return w0


# ---------------------------------------------------------------------------
# fixed-point construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SolveOptions:
    picard_tol: float = 1e-8
    linear_tol: float = 1e-10
    max_picard_iter: int = 500
    max_linear_iter: int | None = None
    damping: float = 0.5
    min_damping: float = 2.0 ** -20
    max_principle_tol: float = 1e-7
    epsilon: float | None = None          # recorded in the report during sweeps
    initial_h: GridFunction | None = None


@dataclass(frozen=True)
class SolveReport:
    """Per-viscosity solve record."""

    epsilon: float | None
    r_eps: float
    m: float
    M: float
    picard_iters: int
    picard_residuals: tuple[float, ...]
    linear_solver_iters: tuple[int, ...]
    u_linf: float
    u_h1: float
    max_principle_margin: float
    estimate_ratio: float
    nonlinear_residual: float
    fixed_point_residual: float
    lift_iters: int

    CSV_HEADER = ("epsilon", "r", "m", "M", "iters", "u_linf", "u_h1",
                  "margin", "ratio")

    def csv_row(self) -> list:
        eps = self.epsilon if self.epsilon is not None else float("nan")
        return [eps, self.r_eps, self.m, self.M, self.picard_iters,
                self.u_linf, self.u_h1, self.max_principle_margin,
                self.estimate_ratio]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["picard_residuals"] = list(self.picard_residuals)
        d["linear_solver_iters"] = list(self.linear_solver_iters)
        return d


def _require_zero_boundary(h: GridFunction) -> None:
    if float(np.max(np.abs(h.boundary_values()))) != 0.0:
        raise PreconditionError("correction must vanish on the boundary")


def _picard_step(h: GridFunction, w0: GridFunction, f: GridFunction,
                 phi_trunc: TruncatedPhi, tol: float,
                 max_iter: int | None, sigma: float = 0.0) -> tuple[GridFunction, int]:
    # sigma > 0 adds the reaction boost sigma*(w - h) that stabilizes the
    # frozen-coefficient map without moving its fixed points
    domain = h.domain
    a_nodal = phi_trunc.deriv(w0.values + h.values)
    rhs = np.zeros(domain.shape)
    interior = ~domain.boundary_mask
    lift_term = apply_elliptic(domain, a_nodal, w0.values)
    rhs[interior] = (f.values - w0.values)[interior] - lift_term.ravel() \
        + sigma * h.values[interior]
    zero_bc = np.zeros(domain.shape)
    w_h, iters = _solve_interior(domain, a_nodal, 1.0 + sigma, rhs, zero_bc, tol, max_iter)
    return w_h, iters


def picard_map(h: GridFunction, w0: GridFunction, f: GridFunction,
               phi_trunc: TruncatedPhi, tol: float = 1e-10,
               max_iter: int | None = None) -> GridFunction:
    """One application of the fixed-point map: solve the linearized problem
    with coefficient frozen at w0 + h; the result vanishes on the boundary."""
    _require_zero_boundary(h)
    w_h, _ = _picard_step(h, w0, f, phi_trunc, tol, max_iter)
    return w_h


def _data_combination(f_linf: float, g_linf: float, dphi_sup: float) -> float:
    return f_linf + (2.0 + dphi_sup) * g_linf


def solve_regularized(f: GridFunction, g: BoundaryData, base: PhiSpec, r: float,
                      opts: SolveOptions = SolveOptions()) -> tuple[GridFunction, SolveReport]:
    """Solve -lap(Phi(u) + r*u) + u = f, u = g on the boundary.

    Damped fixed-point iteration on the boundary-flattened correction,
    starting from zero (or ``opts.initial_h``), with the nonlinearity
    truncated to the data bounds [m, M].  The converged solution is verified
    to stay inside [m, M] (so it also solves the untruncated problem) and the
    fixed-point residual is recorded a posteriori.
    """
    if r <= 0.0:
        raise ValueError("viscosity value must be positive")
    domain = f.domain
    if not g.domain.matches(domain):
        raise GridMismatchError("boundary data lives on a different domain")
    m = min(float(np.min(f.values)), g.min())
    M = max(float(np.max(f.values)), g.max())
    phi_t = truncate(base, m, M, r)
    w0, lift_iters = _solve_interior(domain, np.ones(domain.shape), 0.0,
                                     np.zeros(domain.shape), g.to_full(),
                                     opts.linear_tol, opts.max_linear_iter)
    h = domain.zeros() if opts.initial_h is None else opts.initial_h
    _require_zero_boundary(h)
    # tolerances are absolute for O(1) data and scale with the data magnitude
    # beyond that (mollified point masses reach sup norms of 1/eps)
    data_scale = max(1.0, abs(m), abs(M))
    picard_tol = opts.picard_tol * data_scale
    lam = opts.damping
    sigma = 0.0
    residuals: list[float] = []
    lin_iters: list[int] = []
    prev_res = math.inf
    best_res = math.inf
    since_improve = 0
    fixed_point_residual = math.nan
    converged = False
    steps = 0
    while steps < opts.max_picard_iter:
        w_h, iters = _picard_step(h, w0, f, phi_t, opts.linear_tol,
                                  opts.max_linear_iter, sigma)
        steps += 1
        lin_iters.append(iters)
        map_res = norm(w_h - h, "H10seminorm")
        residuals.append(map_res)
        if sigma == 0.0 and map_res <= picard_tol:
            fixed_point_residual = map_res
            converged = True
            break
        step_lam = lam if sigma == 0.0 else 1.0
        h = GridFunction(domain, (1.0 - step_lam) * h.values + step_lam * w_h.values)
        if sigma > 0.0 and map_res * max(1.0, sigma) <= picard_tol \
                and steps < opts.max_picard_iter:
            # verify against the unboosted map before declaring convergence
            w_true, it2 = _picard_step(h, w0, f, phi_t, opts.linear_tol,
                                       opts.max_linear_iter, 0.0)
            steps += 1
            lin_iters.append(it2)
            true_res = norm(w_true - h, "H10seminorm")
            residuals.append(true_res)
            if true_res <= picard_tol:
                fixed_point_residual = true_res
                converged = True
                break
        # stall control: the plain damped iteration can chatter when the
        # diffusion coefficient degenerates; raise the reaction boost and
        # keep going (fixed points are unchanged)
        if map_res > prev_res:
            if sigma == 0.0:
                lam = max(0.5 * lam, opts.min_damping)
            else:
                sigma = min(4.0 * sigma, 1e6)
        if map_res < 0.98 * best_res:
            best_res = map_res
            since_improve = 0
        else:
            since_improve += 1
        stalled = (sigma == 0.0
                   and map_res > picard_tol
                   and (lam <= opts.damping * 2.0 ** -4 or since_improve >= 12))
        if stalled:
            sigma = 1.0
            best_res = math.inf
            since_improve = 0
            prev_res = math.inf
        else:
            prev_res = map_res
    if not converged:
        raise PicardStalled(
            f"fixed-point iteration did not reach {opts.picard_tol:g} within "
            f"{opts.max_picard_iter} steps (last residual {residuals[-1]:.3e})",
            residuals)
    u = GridFunction(domain, w0.values + h.values)
    margin = float(min(np.min(M - u.values), np.min(u.values - m)))
    if margin < -opts.max_principle_tol * data_scale:
        raise MaxPrincipleViolation(
            f"solution leaves [m, M] by {-margin:.3e}", margin)
    interior = ~domain.boundary_mask
    resid = apply_elliptic(domain, phi_t.deriv(u.values), u.values).ravel() \
        + (u.values - f.values)[interior]
    cell = float(np.prod(domain.h))
    nonlinear_residual = float(math.sqrt(cell * np.sum(resid ** 2)))
    u_linf = norm(u, "Linf")
    u_h1 = norm(u, "H1")
    combo = _data_combination(norm(f, "Linf"), g.linf(), base.dphi_sup)
    if combo > 0.0:
        ratio = r * u_h1 / combo
    else:
        ratio = 0.0 if u_h1 == 0.0 else math.inf
    report = SolveReport(
        epsilon=opts.epsilon, r_eps=r, m=m, M=M,
        picard_iters=len(residuals),
        picard_residuals=tuple(residuals),
        linear_solver_iters=tuple(lin_iters),
        u_linf=u_linf, u_h1=u_h1,
        max_principle_margin=margin,
        estimate_ratio=ratio,
        nonlinear_residual=nonlinear_residual,
        fixed_point_residual=fixed_point_residual,
        lift_iters=lift_iters,
    )
    return u, report


def check_h1_estimate(report: SolveReport, f: GridFunction, g: BoundaryData,
                      dphi_sup: float, c_cal: float) -> bool:
    """Whether the recorded H1 norm obeys the calibrated a-priori bound
    (C/r) * (|f|_inf + (2 + sup Phi') * |g|_inf)."""
    if c_cal <= 0.0:
        raise ValueError("calibration constant must be positive")
    combo = _data_combination(norm(f, "Linf"), g.linf(), dphi_sup)
    return report.u_h1 <= (c_cal / report.r_eps) * combo * (1.0 + 1e-12)


def calibrate_estimate_constant(domain: Domain, base: PhiSpec,
                                rng: np.random.Generator,
                                instances: int = 20,
                                r_values: Sequence[float] = (0.5, 0.1),
                                opts: SolveOptions = SolveOptions()) -> float:
    """Freeze the domain constant of the a-priori bound: solve random
    bounded-data instances at moderate viscosities and take 1.5x the largest
    observed ratio r * |u|_E / data combination."""
    from .data_ingestion import random_boundary, random_smooth_field

    worst = 0.0
    for i in range(instances):
        r = r_values[i % len(r_values)]
        f = random_smooth_field(domain, rng, low=-2.0, high=2.0)
        g = random_boundary(domain, rng, low=-1.0, high=1.0)
        u, rep = solve_regularized(f, g, base, r, opts)
        combo = _data_combination(norm(f, "Linf"), g.linf(), base.dphi_sup)
        worst = max(worst, r * norm(u, "E") / combo)
    return 1.5 * worst


# ---------------------------------------------------------------------------
# generalized (net-wise) solves
# ---------------------------------------------------------------------------

def _boundary_list(G, grid) -> list[BoundaryData]:
    if isinstance(G, BoundaryData):
        return [G] * len(grid)
    G = list(G)
    if len(G) != len(grid):
        raise GridMismatchError("boundary net length does not match the epsilon grid")
    return G


def _solve_member(args):
    f, g, base, r, opts = args
    return solve_regularized(f, g, base, r, opts)


def generalized_solve(F: GeneralizedGridFunction, G, base: PhiSpec,
                      r: ViscosityScale, opts: SolveOptions = SolveOptions(),
                      workers: int = 1, k_max: int = DEFAULT_K_MAX,
                      tol: float = DEFAULT_TOL):
    """Member-wise regularized solves along the epsilon grid.

    Returns the solution family and the per-member reports.  The E-norm net
    of the output is classified and must be of polynomial growth; boundary
    values are imposed bit-exactly, so the trace of the solution equals the
    boundary net."""
    grid = F.grid
    if not r.grid.matches(grid):
        raise GridMismatchError("viscosity scale lives on a different epsilon grid")
    gs = _boundary_list(G, grid)
    jobs = [(F.members[j], gs[j], base, float(r.values[j]),
             replace(opts, epsilon=float(grid.eps_values[j])))
            for j in range(len(grid))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_member, jobs))
    else:
        results = [_solve_member(job) for job in jobs]
    members = [u for u, _ in results]
    reports = [rep for _, rep in results]
    U = GeneralizedGridFunction(grid, members, norm_tag="E", resolved=F.resolved)
    cls = U.classify_norms(k_max=k_max, tol=tol)
    if not cls.is_moderate:
        raise GenAlgError("solution norm net is not of polynomial growth")
    for u, g in zip(members, gs):
        if not np.array_equal(u.boundary_values(), g.values):
            raise GenAlgError("trace of the solution differs from the boundary net")
    return U, reports


# ---------------------------------------------------------------------------
# weak-solution and non-positivity checks
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class WeakResidualEntry:
    test_id: str
    residuals: np.ndarray          # -r_eps * \int u_eps * lap(phi)
    bounds: np.ndarray
    bound_ok: bool
    tends_ok: bool
    slope: float | None

    def to_dict(self) -> dict:
        return {"test_id": self.test_id,
                "residuals": [float(v) for v in self.residuals],
                "bounds": [float(v) for v in self.bounds],
                "bound_ok": self.bound_ok, "tends_ok": self.tends_ok,
                "slope": self.slope}


@dataclass(eq=False)
class WeakSolutionReport:
    hyp_values: np.ndarray
    hyp_ok: bool
    entries: list
    decomposition_gap: float
    decomposition_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"hyp_values": [float(v) for v in self.hyp_values],
                "hyp_ok": self.hyp_ok,
                "decomposition_gap": self.decomposition_gap,
                "decomposition_ok": self.decomposition_ok,
                "passed": self.passed,
                "tests": [e.to_dict() for e in self.entries]}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _fit_slope(eps: np.ndarray, values: np.ndarray) -> float | None:
    mask = values > 0.0
    if np.count_nonzero(mask) < 5:
        return None
    return float(np.polyfit(np.log(eps[mask]), np.log(values[mask]), 1)[0])


def weak_solution_check(U: GeneralizedGridFunction, F: GeneralizedGridFunction,
                        G, r: ViscosityScale, tests: Sequence[TestFunctionH20],
                        base: PhiSpec, tol: float = 1e-2,
                        use_resolved: bool = True) -> WeakSolutionReport:
    """Verify the vanishing-viscosity residual of a generalized solve.

    (a) the net r_eps * max(|g|_inf, |f|_inf) must tend to zero (else
    NotWeaklySolvable); (b) for each test function the pairing residual
    -r_eps \int u_eps lap(phi) obeys the Cauchy-Schwarz bound
    r*maxdata*sqrt(|domain|)*|lap phi|_L2 and tends to zero; (c) the discrete
    splitting of the diffusion term off the solve residual closes exactly
    (bookkeeping identity, caught at round-off scale).
    """
    grid = U.grid
    if not tests:
        raise ValueError("need at least one test function")
    gs = _boundary_list(G, grid)
    rv = r.values
    fnorms = np.array([norm(fj, "Linf") for fj in F.members])
    gnorms = np.array([g.linf() for g in gs])
    hyp = rv * np.maximum(fnorms, gnorms)
    mask = U.resolved if (use_resolved and U.resolved is not None) \
        else np.ones(len(grid), dtype=bool)
    hyp_ok = tends_to_zero(hyp[mask], tol)
    if not hyp_ok:
        raise NotWeaklySolvable(
            "r_eps * max(|g|_inf, |f|_inf) does not vanish along the grid",
            net=hyp)
    domain = U.domain
    w = domain.trapezoid_weights()
    sqrt_measure = math.sqrt(domain.measure)
    maxdata = np.maximum(fnorms, gnorms)
    entries = []
    for tf in tests:
        lap_l2 = math.sqrt(float(np.sum(w * tf.lap_values ** 2)))
        rho = np.array([-rv[j] * float(np.sum(w * U.members[j].values * tf.lap_values))
                        for j in range(len(grid))])
        bound = rv * maxdata * sqrt_measure * lap_l2
        bound_ok = bool(np.all(np.abs(rho) <= bound * (1.0 + 1e-6) + 1e-300))
        tends_ok = tends_to_zero(np.abs(rho)[mask], tol)
        slope = _fit_slope(grid.eps_values[mask], np.abs(rho)[mask])
        entries.append(WeakResidualEntry(tf.label, rho, bound, bound_ok, tends_ok, slope))
    # (c) discrete splitting: the diffusion term with the viscosity part
    # separated must reproduce the nonlinear solve residual identically.
    interior = ~domain.boundary_mask
    ones = np.ones(domain.shape)
    gap = 0.0
    for j in range(len(grid)):
        u = U.members[j].values
        fj = F.members[j].values
        m = min(float(np.min(fj)), gs[j].min())
        M = max(float(np.max(fj)), gs[j].max())
        phi_t = truncate(base, m, M, float(rv[j]))
        coeff = phi_t.deriv(u)
        solve_resid = apply_elliptic(domain, coeff, u).ravel() + (u - fj)[interior]
        lhs = apply_elliptic(domain, coeff - rv[j], u).ravel()
        rhs = (fj - u)[interior] - rv[j] * apply_elliptic(domain, ones, u).ravel()
        scale = max(1.0, float(np.max(np.abs(lhs))))
        gap = max(gap, float(np.max(np.abs(lhs - rhs - solve_resid))) / scale)
    decomposition_ok = gap <= 1e-9
    passed = hyp_ok and decomposition_ok and all(e.bound_ok and e.tends_ok for e in entries)
    return WeakSolutionReport(hyp_values=hyp, hyp_ok=hyp_ok, entries=entries,
                              decomposition_gap=gap,
                              decomposition_ok=decomposition_ok, passed=passed)


def check_nonpositive(U: GeneralizedGridFunction, F: GeneralizedGridFunction,
                      G, k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL,
                      solver_tol: float = 1e-7) -> bool:
    """Non-positive data must give a non-positive solution.

    Precondition (raises PreconditionError): the positive parts of the data
    nets are negligible.  Returns whether the solution is <= 0 in the
    generalized order and, more strongly, whether every member stays below
    max(sup data, 0) + solver_tol nodally.
    """
    grid = U.grid
    gs = _boundary_list(G, grid)
    f_pos = RealNet(grid, np.array([norm(positive_part(fj), "Linf") for fj in F.members]))
    g_pos = RealNet(grid, np.array([max(float(np.max(np.maximum(g.values, 0.0))), 0.0)
                                    for g in gs]))
    if not classify_net(f_pos, k_max=k_max, tol=tol).is_negligible:
        raise PreconditionError("interior data is not non-positive in the generalized order")
    if not classify_net(g_pos, k_max=k_max, tol=tol).is_negligible:
        raise PreconditionError("boundary data is not non-positive in the generalized order")
    per_eps_ok = True
    for j in range(len(grid)):
        M_eps = max(float(np.max(F.members[j].values)), gs[j].max())
        if float(np.max(U.members[j].values)) > max(M_eps, 0.0) + solver_tol:
            per_eps_ok = False
            break
    u_pos = RealNet(grid, np.array([norm(positive_part(u), "Linf") for u in U.members]))
    leq_zero = classify_net(u_pos, k_max=k_max, tol=tol).is_negligible
    return leq_zero and per_eps_ok
