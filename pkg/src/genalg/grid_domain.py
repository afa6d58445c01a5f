"""Discrete function spaces on 1D intervals and 2D rectangles.

Nodal grid functions on uniform meshes with boundary nodes explicit, the
Linf/L2/H1 norms used throughout, the positive-part order on families of grid
functions, weak association against integrable targets or point masses, and
extension of the built-in continuous linear functionals to nets.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GridMismatchError, PreconditionError
from .scale_ring import (DEFAULT_K_MAX, DEFAULT_TOL, EpsilonGrid, RealNet,
                         ScaleClass, classify_net, tends_to_zero)


class Domain:
    """Uniform mesh on an interval [a, b] or rectangle [a, b] x [c, e] with
    n interior nodes per axis; boundary nodes are part of every grid."""

    def __init__(self, dimension: int, bounds, n: int):
        if dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if n < 1:
            raise ValueError("need at least one interior node per axis")
        self.dimension = dimension
        self.n = int(n)
        if dimension == 1:
            a, b = map(float, bounds)
            if b <= a:
                raise ValueError("empty interval")
            self.bounds = ((a, b),)
        else:
            (a, b), (c, e) = bounds
            if b <= a or e <= c:
                raise ValueError("empty rectangle")
            self.bounds = ((float(a), float(b)), (float(c), float(e)))
        self.h = tuple((hi - lo) / (self.n + 1) for lo, hi in self.bounds)
        self.axes = tuple(np.linspace(lo, hi, self.n + 2) for lo, hi in self.bounds)
        self.shape = (self.n + 2,) * dimension
        mask = np.zeros(self.shape, dtype=bool)
        if dimension == 1:
            mask[0] = mask[-1] = True
        else:
            mask[0, :] = mask[-1, :] = True
            mask[:, 0] = mask[:, -1] = True
        self.boundary_mask = mask
        self.measure = float(np.prod([hi - lo for lo, hi in self.bounds]))

    @classmethod
    def interval(cls, a: float, b: float, n: int) -> "Domain":
        return cls(1, (a, b), n)

    @classmethod
    def rectangle(cls, xbounds, ybounds, n: int) -> "Domain":
        return cls(2, (xbounds, ybounds), n)

    def matches(self, other: "Domain") -> bool:
        return (self.dimension == other.dimension and self.n == other.n
                and self.bounds == other.bounds)

    def coordinate_arrays(self) -> tuple[np.ndarray, ...]:
        if self.dimension == 1:
            return (self.axes[0],)
        return tuple(np.meshgrid(self.axes[0], self.axes[1], indexing="ij"))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape))

    def sample(self, fn) -> "GridFunction":
        coords = self.coordinate_arrays()
        return GridFunction(self, np.asarray(fn(*coords), dtype=float) + np.zeros(self.shape))

    def trapezoid_weights(self) -> np.ndarray:
        ws = []
        for ax, h in zip(self.axes, self.h):
            w = np.full(ax.size, h)
            w[0] = w[-1] = 0.5 * h
            ws.append(w)
        if self.dimension == 1:
            return ws[0]
        return np.outer(ws[0], ws[1])

    def contains(self, x0) -> bool:
        pts = np.atleast_1d(np.asarray(x0, dtype=float))
        if pts.size != self.dimension:
            return False
        return all(lo - 1e-12 <= p <= hi + 1e-12
                   for p, (lo, hi) in zip(pts, self.bounds))

    def is_interior_point(self, x0) -> bool:
        pts = np.atleast_1d(np.asarray(x0, dtype=float))
        if pts.size != self.dimension:
            return False
        return all(lo < p < hi for p, (lo, hi) in zip(pts, self.bounds))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values at all nodes of a Domain, boundary included."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.domain.shape:
            raise ValueError("values shape does not match the domain grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function has non-finite values")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _require_same_domain(self, other)
        return GridFunction(self.domain, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _require_same_domain(self, other)
        return GridFunction(self.domain, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.domain, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.domain, -self.values)

    def boundary_values(self) -> np.ndarray:
        return self.values[self.domain.boundary_mask]


def _require_same_domain(a, b) -> None:
    if not a.domain.matches(b.domain):
        raise GridMismatchError("grid functions live on different domains")


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Values at boundary nodes only, in row-major boundary order."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", vals)
        expected = int(np.count_nonzero(self.domain.boundary_mask))
        if vals.size != expected:
            raise ValueError(f"expected {expected} boundary values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("boundary data has non-finite values")

    @classmethod
    def constant(cls, domain: Domain, c: float) -> "BoundaryData":
        n = int(np.count_nonzero(domain.boundary_mask))
        return cls(domain, np.full(n, float(c)))

    @classmethod
    def from_grid(cls, u: GridFunction) -> "BoundaryData":
        return cls(u.domain, u.values[u.domain.boundary_mask])

    @classmethod
    def sample(cls, domain: Domain, fn) -> "BoundaryData":
        coords = domain.coordinate_arrays()
        full = np.asarray(fn(*coords), dtype=float) + np.zeros(domain.shape)
        return cls(domain, full[domain.boundary_mask])

    def to_full(self, fill: float = 0.0) -> np.ndarray:
        arr = np.full(self.domain.shape, fill)
        arr[self.domain.boundary_mask] = self.values
        return arr

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def min(self) -> float:
        return float(np.min(self.values))

    def max(self) -> float:
        return float(np.max(self.values))


def norm(u: GridFunction, which: str) -> float:
    """Nodal norms: Linf, trapezoid L2/L1, forward-difference H10 seminorm
    (the energy of the 3/5-point stencil, boundary cells use the Dirichlet
    value), H1 = sqrt(L2^2 + H10^2), and the ambient E-norm Linf + H1."""
    v = u.values
    if which == "Linf":
        return float(np.max(np.abs(v)))
    if which in ("L2", "L1"):
        w = u.domain.trapezoid_weights()
        if which == "L2":
            return float(math.sqrt(np.sum(w * v * v)))
        return float(np.sum(w * np.abs(v)))
    if which == "H10seminorm":
        return math.sqrt(_h10_square(u))
    if which == "H1":
        w = u.domain.trapezoid_weights()
        return float(math.sqrt(np.sum(w * v * v) + _h10_square(u)))
    if which == "E":
        return norm(u, "Linf") + norm(u, "H1")
    raise ValueError(f"unknown norm {which!r}")


def _h10_square(u: GridFunction) -> float:
    v = u.values
    dom = u.domain
    if dom.dimension == 1:
        h = dom.h[0]
        return float(np.sum(np.diff(v) ** 2) / h)
    hx, hy = dom.h
    wx = np.full(dom.shape[0], hx)
    wx[0] = wx[-1] = 0.5 * hx
    wy = np.full(dom.shape[1], hy)
    wy[0] = wy[-1] = 0.5 * hy
    dx = np.diff(v, axis=0)
    dy = np.diff(v, axis=1)
    sx = np.sum((dx ** 2) * wy[None, :]) / hx
    sy = np.sum((dy ** 2) * wx[:, None]) / hy
    return float(sx + sy)


def integrate(u: GridFunction) -> float:
    return float(np.sum(u.domain.trapezoid_weights() * u.values))


def positive_part(u: GridFunction) -> GridFunction:
    return GridFunction(u.domain, np.maximum(u.values, 0.0))


class GeneralizedGridFunction:
    """One grid function per grid point of an epsilon grid, all on the same
    Domain.  ``norm_tag`` selects the ambient norm that defines polynomial
    growth ("Linf" or the sum norm "E"); ``resolved`` optionally flags the
    members whose sampling is trusted (mollified data at small eps is kept
    but flagged)."""

    def __init__(self, grid: EpsilonGrid, members: Sequence[GridFunction],
                 norm_tag: str = "E", resolved: np.ndarray | None = None,
                 norm_class: ScaleClass | None = None):
        members = tuple(members)
        if len(members) != len(grid):
            raise ValueError("need one member per epsilon value")
        domain = members[0].domain
        for m in members[1:]:
            if not m.domain.matches(domain):
                raise GridMismatchError("members live on different domains")
        if norm_tag not in ("Linf", "E"):
            raise ValueError("norm_tag must be 'Linf' or 'E'")
        if resolved is not None:
            resolved = np.asarray(resolved, dtype=bool)
            if resolved.shape != (len(grid),):
                raise ValueError("resolved flags must match the epsilon grid")
        self.grid = grid
        self.members = members
        self.domain = domain
        self.norm_tag = norm_tag
        self.resolved = resolved
        self.norm_class = norm_class

    def __len__(self) -> int:
        return len(self.members)

    def norm_net(self, which: str | None = None) -> RealNet:
        which = which or self.norm_tag
        return RealNet(self.grid, np.array([norm(u, which) for u in self.members]))

    def map(self, fn) -> "GeneralizedGridFunction":
        return GeneralizedGridFunction(self.grid, [fn(u) for u in self.members],
                                       norm_tag=self.norm_tag, resolved=self.resolved)

    def scale_by_net(self, net: RealNet) -> "GeneralizedGridFunction":
        if not net.grid.matches(self.grid):
            raise GridMismatchError("net lives on a different epsilon grid")
        members = [GridFunction(self.domain, c * u.values)
                   for c, u in zip(net.values, self.members)]
        return GeneralizedGridFunction(self.grid, members, norm_tag=self.norm_tag,
                                       resolved=self.resolved)

    def __add__(self, other: "GeneralizedGridFunction") -> "GeneralizedGridFunction":
        self._require_compatible(other)
        return GeneralizedGridFunction(self.grid,
                                       [a + b for a, b in zip(self.members, other.members)],
                                       norm_tag=self.norm_tag, resolved=self.resolved)

    def __sub__(self, other: "GeneralizedGridFunction") -> "GeneralizedGridFunction":
        self._require_compatible(other)
        return GeneralizedGridFunction(self.grid,
                                       [a - b for a, b in zip(self.members, other.members)],
                                       norm_tag=self.norm_tag, resolved=self.resolved)

    def _require_compatible(self, other) -> None:
        if not self.grid.matches(other.grid):
            raise GridMismatchError("operands live on different epsilon grids")
        if not self.domain.matches(other.domain):
            raise GridMismatchError("operands live on different domains")

    def classify_norms(self, k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL,
                       fit_window=None) -> ScaleClass:
        cls = classify_net(self.norm_net(), fit_window=fit_window, k_max=k_max, tol=tol)
        self.norm_class = cls
        return cls


def embed_constant(u: GridFunction, grid: EpsilonGrid) -> GeneralizedGridFunction:
    """The trivial embedding: every member equals u, so the norm net is
    constant and of polynomial growth."""
    return GeneralizedGridFunction(grid, (u,) * len(grid), norm_tag="E")


def zero_generalized(domain: Domain, grid: EpsilonGrid) -> GeneralizedGridFunction:
    return embed_constant(domain.zeros(), grid)


def gen_positive_part(U: GeneralizedGridFunction) -> GeneralizedGridFunction:
    """Member-wise positive part; |(r+s)^+ - r^+| <= |s| makes this map
    compatible with the quotient construction (identity-shaped bounds)."""
    return U.map(positive_part)


def gen_leq(U: GeneralizedGridFunction, V: GeneralizedGridFunction,
            k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL) -> bool:
    """Partial order: U <= V iff the net of sup-norms of (u - v)^+ is
    negligible (the positive part of the difference vanishes in the quotient)."""
    U._require_compatible(V)
    vals = [norm(positive_part(a - b), "Linf") for a, b in zip(U.members, V.members)]
    return classify_net(RealNet(U.grid, np.array(vals)), k_max=k_max, tol=tol).is_negligible


# ---------------------------------------------------------------------------
# test functions with zero boundary contact of second order
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunctionH20:
    """Nodal values of a twice-differentiable test function vanishing at the
    boundary together with its first derivatives, plus analytic nodal values
    of its Laplacian."""

    domain: Domain
    values: np.ndarray
    lap_values: np.ndarray
    label: str = "phi"

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "lap_values", np.asarray(self.lap_values, dtype=float))
        if self.values.shape != self.domain.shape or self.lap_values.shape != self.domain.shape:
            raise ValueError("test function arrays do not match the domain grid")

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.domain, self.values)


def _window_poly(s: np.ndarray, L: float):
    p = (s * (L - s)) ** 2
    dp = 2.0 * s * (L - s) * (L - 2.0 * s)
    d2p = 2.0 * ((L - 2.0 * s) ** 2 - 2.0 * s * (L - s))
    return p, dp, d2p


def _profile_1d(x: np.ndarray, a: float, b: float, k: int):
    """((x-a)(b-x))^2 * cos(k*pi*(x-a)/(b-a)) and its second derivative."""
    L = b - a
    s = x - a
    p, dp, d2p = _window_poly(s, L)
    w = k * math.pi / L
    c = np.cos(w * s)
    dc = -w * np.sin(w * s)
    d2c = -w * w * c
    return p * c, d2p * c + 2.0 * dp * dc + p * d2c


_PAIRS_2D = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]


def build_test_functions(domain: Domain, count: int = 3) -> list[TestFunctionH20]:
    if count < 1:
        raise ValueError("need at least one test function")
    out = []
    if domain.dimension == 1:
        (a, b), = domain.bounds
        x = domain.axes[0]
        for k in range(count):
            phi, lap = _profile_1d(x, a, b, k)
            out.append(TestFunctionH20(domain, phi, lap, label=f"phi{k}"))
        return out
    if count > len(_PAIRS_2D):
        raise ValueError(f"at most {len(_PAIRS_2D)} built-in 2D test functions")
    (a, b), (c, e) = domain.bounds
    X = domain.axes[0][:, None]
    Y = domain.axes[1][None, :]
    for k, m in _PAIRS_2D[:count]:
        px, d2px = _profile_1d(X, a, b, k)
        py, d2py = _profile_1d(Y, c, e, m)
        out.append(TestFunctionH20(domain, px * py, d2px * py + px * d2py,
                                   label=f"phi{k}{m}"))
    return out


def h20_boundary_values_max(tf: TestFunctionH20) -> float:
    return float(np.max(np.abs(tf.values[tf.domain.boundary_mask])))


def h20_onesided_derivative_max(tf: TestFunctionH20) -> float:
    """Largest 3-point one-sided normal derivative on the boundary; for a
    function with second-order boundary contact this decays like h^2."""
    v = tf.values
    dom = tf.domain
    worst = 0.0
    for axis, h in enumerate(dom.h):
        lo = np.moveaxis(v, axis, 0)
        left = (-3.0 * lo[0] + 4.0 * lo[1] - lo[2]) / (2.0 * h)
        right = (3.0 * lo[-1] - 4.0 * lo[-2] + lo[-3]) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(left))), float(np.max(np.abs(right))))
    return worst


# ---------------------------------------------------------------------------
# interpolation and functionals
# ---------------------------------------------------------------------------

def _lagrange_stencil(axis: np.ndarray, x: float) -> tuple[int, np.ndarray]:
    m = axis.size
    cell = int(np.clip(np.searchsorted(axis, x) - 1, 0, m - 2))
    start = int(np.clip(cell - 1, 0, m - 4))
    xs = axis[start:start + 4]
    w = np.ones(4)
    for i in range(4):
        for j in range(4):
            if i != j:
                w[i] *= (x - xs[j]) / (xs[i] - xs[j])
    return start, w


def point_value(u: GridFunction, x0) -> float:
    """Local cubic Lagrange interpolation of nodal values at a point."""
    dom = u.domain
    if not dom.contains(x0):
        raise ValueError("point sample outside the domain")
    pts = np.atleast_1d(np.asarray(x0, dtype=float))
    if dom.dimension == 1:
        s, w = _lagrange_stencil(dom.axes[0], pts[0])
        return float(w @ u.values[s:s + 4])
    sx, wx = _lagrange_stencil(dom.axes[0], pts[0])
    sy, wy = _lagrange_stencil(dom.axes[1], pts[1])
    block = u.values[sx:sx + 4, sy:sy + 4]
    return float(wx @ block @ wy)


def extend_functional(U: GeneralizedGridFunction, functional) -> RealNet:
    """Apply a built-in continuous linear functional member-wise.  The result
    is a net of polynomial growth because each functional is norm-bounded
    (|theta(u)| <= C ||u||), the linear case of the lifting certificate."""
    if functional == "mean":
        vals = [integrate(u) / U.domain.measure for u in U.members]
    elif functional == "integral":
        vals = [integrate(u) for u in U.members]
    elif isinstance(functional, tuple) and len(functional) == 2 and functional[0] == "point_sample":
        x0 = functional[1]
        if not U.domain.contains(x0):
            raise ValueError("point sample outside the domain")
        vals = [point_value(u, x0) for u in U.members]
    else:
        raise ValueError("functional must be 'mean', 'integral' or ('point_sample', x)")
    return RealNet(U.grid, np.array(vals))


# ---------------------------------------------------------------------------
# weak association
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointMass:
    """A point-mass pairing target: weight * phi(location)."""

    location: object
    weight: float = 1.0


@dataclass(eq=False)
class AssociationEntry:
    test_id: str
    values: np.ndarray
    target_value: float
    passed: bool

    def to_dict(self) -> dict:
        return {"test_id": self.test_id, "net": [float(v) for v in self.values],
                "target": self.target_value, "passed": self.passed}


@dataclass(eq=False)
class AssociationReport:
    mode: str
    entries: list
    passed: bool
    resolved_only: bool

    def to_dicts(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps({"mode": self.mode, "passed": self.passed,
                           "resolved_only": self.resolved_only,
                           "tests": self.to_dicts()}, indent=indent)


def _pairing_target(target, tf: TestFunctionH20) -> float:
    if isinstance(target, PointMass):
        return target.weight * point_value(tf.as_grid_function(), target.location)
    if isinstance(target, GridFunction):
        w = target.domain.trapezoid_weights()
        return float(np.sum(w * target.values * tf.values))
    raise ValueError("target must be a GridFunction or a PointMass")


def assoc_weak(U: GeneralizedGridFunction, target, tests: Sequence[TestFunctionH20] = (),
               mode: str = "Hminus2", tol: float = 1e-3,
               use_resolved: bool = True) -> AssociationReport:
    """Association of a family with a target in a weaker pairing.

    Mode "Hminus2" pairs every member against each supplied test function by
    trapezoid quadrature and checks the difference to the target pairing
    tends to zero along the grid (tail below tol, no rebound).  Mode "L1"
    checks the L1 distance to a grid-function target directly.  When the
    family carries resolved flags, only trusted members enter the tail check.
    """
    mask = None
    if use_resolved and U.resolved is not None:
        mask = U.resolved
    entries = []
    if mode == "Hminus2":
        if not tests:
            raise ValueError("Hminus2 association needs at least one test function")
        w = U.domain.trapezoid_weights()
        for tf in tests:
            if not isinstance(tf, TestFunctionH20):
                raise ValueError("Hminus2 tests must carry Laplacian data")
            tval = _pairing_target(target, tf)
            diffs = np.array([float(np.sum(w * u.values * tf.values)) - tval
                              for u in U.members])
            checked = diffs if mask is None else diffs[mask]
            entries.append(AssociationEntry(tf.label, diffs, tval,
                                            tends_to_zero(np.abs(checked), tol)))
    elif mode == "L1":
        if not isinstance(target, GridFunction):
            raise ValueError("L1 association needs a grid-function target")
        dists = np.array([norm(u - target, "L1") for u in U.members])
        checked = dists if mask is None else dists[mask]
        entries.append(AssociationEntry("L1", dists, 0.0,
                                        tends_to_zero(checked, tol)))
    else:
        raise ValueError("mode must be 'Hminus2' or 'L1'")
    return AssociationReport(mode=mode, entries=entries,
                             passed=all(e.passed for e in entries),
                             resolved_only=mask is not None)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_grid_csv(u: GridFunction, path) -> None:
    dom = u.domain
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if dom.dimension == 1:
            writer.writerow(["x", "value"])
            for x, v in zip(dom.axes[0], u.values):
                writer.writerow([f"{x:.17g}", f"{v:.17g}"])
        else:
            writer.writerow(["x", "y", "value"])
            for i, x in enumerate(dom.axes[0]):
                for j, y in enumerate(dom.axes[1]):
                    writer.writerow([f"{x:.17g}", f"{y:.17g}", f"{u.values[i, j]:.17g}"])


def read_grid_csv(path, domain: Domain) -> GridFunction:
    vals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                vals.append(float(row[-1]))
    expected = int(np.prod(domain.shape))
    if len(vals) != expected:
        raise ValueError(f"{path}: expected {expected} rows, got {len(vals)}")
    return GridFunction(domain, np.asarray(vals).reshape(domain.shape))


def write_boundary_csv(g: BoundaryData, path) -> None:
    dom = g.domain
    coords = dom.coordinate_arrays()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if dom.dimension == 1:
            writer.writerow(["x", "value"])
            xs = coords[0][dom.boundary_mask]
            for x, v in zip(xs, g.values):
                writer.writerow([f"{x:.17g}", f"{v:.17g}"])
        else:
            writer.writerow(["x", "y", "value"])
            xs = coords[0][dom.boundary_mask]
            ys = coords[1][dom.boundary_mask]
            for x, y, v in zip(xs, ys, g.values):
                writer.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])


def read_boundary_csv(path, domain: Domain) -> BoundaryData:
    vals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                vals.append(float(row[-1]))
    return BoundaryData(domain, np.asarray(vals))
