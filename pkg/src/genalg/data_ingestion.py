"""Data builders: mollified point-mass families, expression- or file-defined
fields and boundary values, and random smooth fields for property batteries."""

from __future__ import annotations

import ast
import math
import operator
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ExpressionError
from .grid_domain import (BoundaryData, Domain, GeneralizedGridFunction,
                          GridFunction, embed_constant, read_boundary_csv,
                          read_grid_csv)
from .scale_ring import EpsilonGrid, RealNet, ViscosityScale, tends_to_zero, validate_viscosity

# ---------------------------------------------------------------------------
# expression mini-language
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}
_VARIADIC = {"min": np.minimum, "max": np.maximum}


def parse_expression(text: str, variables: Sequence[str] = ("x", "y")) -> Callable:
    """Compile a small arithmetic expression over the named variables.

    Supported: numeric literals, the variables, + - * /, parentheses and the
    functions sin, cos, exp, abs, min, max.  Anything else is rejected.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (int, float)):
                return float(node.value)
            raise ExpressionError(f"unsupported literal {node.value!r}")
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            raise ExpressionError(f"unknown variable {node.id!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand, env))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            name = node.func.id
            args = [ev(a, env) for a in node.args]
            if node.keywords:
                raise ExpressionError("keyword arguments are not supported")
            if name in _FUNCS:
                if len(args) != 1:
                    raise ExpressionError(f"{name} takes one argument")
                return _FUNCS[name](args[0])
            if name in _VARIADIC:
                if len(args) < 2:
                    raise ExpressionError(f"{name} takes at least two arguments")
                out = args[0]
                for a in args[1:]:
                    out = _VARIADIC[name](out, a)
                return out
            raise ExpressionError(f"unknown function {name!r}")
        raise ExpressionError(f"unsupported syntax in {text!r}")

    def fn(*args):
        if len(args) != len(variables):
            raise ExpressionError(f"expected {len(variables)} arguments")
        return ev(tree, dict(zip(variables, args)))

    fn.source = text
    return fn


# ---------------------------------------------------------------------------
# mollifiers
# ---------------------------------------------------------------------------

_QUAD_POINTS = 100_001


def _raw_profile(profile: str) -> Callable[[np.ndarray], np.ndarray]:
    if profile == "bump":
        def raw(s):
            s = np.asarray(s, dtype=float)
            inside = np.abs(s) < 1.0
            out = np.zeros_like(s)
            arg = np.where(inside, 1.0 - s * s, 1.0)
            out[inside] = np.exp(-1.0 / arg[inside])
            return out
        return raw
    if profile == "triangle":
        return lambda s: np.maximum(1.0 - np.abs(np.asarray(s, dtype=float)), 0.0)
    if profile == "cosine":
        def raw(s):
            s = np.asarray(s, dtype=float)
            return np.where(np.abs(s) <= 1.0, 0.5 * (1.0 + np.cos(math.pi * s)), 0.0)
        return raw
    raise ValueError(f"unknown mollifier profile {profile!r}; choose from "
                     "['bump', 'cosine', 'triangle']")


@dataclass(frozen=True)
class Mollifier:
    """Nonnegative profile supported in the unit ball, normalized so the
    scaled family eps**-d * profile(./eps) has unit integral."""

    profile: str
    dimension: int
    norm_const: float

    @classmethod
    def build(cls, profile: str = "bump", dimension: int = 1) -> "Mollifier":
        if dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        raw = _raw_profile(profile)
        if dimension == 1:
            s = np.linspace(-1.0, 1.0, _QUAD_POINTS)
            z = float(np.trapz(raw(s), s))
        else:
            rho = np.linspace(0.0, 1.0, _QUAD_POINTS)
            z = float(2.0 * math.pi * np.trapz(raw(rho) * rho, rho))
        if z <= 0.0:
            raise ValueError("profile does not integrate to a positive mass")
        return cls(profile=profile, dimension=dimension, norm_const=z)

    def __call__(self, s) -> np.ndarray:
        return _raw_profile(self.profile)(s) / self.norm_const

    def peak(self) -> float:
        return float(self(0.0))

    def integral(self) -> float:
        """Fine-quadrature integral of the normalized profile (should be 1)."""
        if self.dimension == 1:
            s = np.linspace(-1.0, 1.0, _QUAD_POINTS)
            return float(np.trapz(self(s), s))
        rho = np.linspace(0.0, 1.0, _QUAD_POINTS)
        return float(2.0 * math.pi * np.trapz(self(rho) * rho, rho))


def dirac_net(x0, moll: Mollifier, domain: Domain, grid: EpsilonGrid) -> GeneralizedGridFunction:
    """Mollified point-mass family u_eps(x) = eps**-d * phi((x - x0)/eps)
    sampled nodally.  Members whose support leaves the domain or is
    under-resolved (eps < 2h) are kept but flagged unresolved."""
    if moll.dimension != domain.dimension:
        raise ValueError("mollifier dimension does not match the domain")
    if not domain.is_interior_point(x0):
        raise ValueError("point mass location must be interior to the domain")
    pts = np.atleast_1d(np.asarray(x0, dtype=float))
    coords = domain.coordinate_arrays()
    if domain.dimension == 1:
        dist = np.abs(coords[0] - pts[0])
    else:
        dist = np.hypot(coords[0] - pts[0], coords[1] - pts[1])
    members = []
    resolved = []
    hmax = max(domain.h)
    d = domain.dimension
    for eps in grid.eps_values:
        members.append(GridFunction(domain, moll(dist / eps) * eps ** (-d)))
        fits = all(lo <= p - eps and p + eps <= hi
                   for p, (lo, hi) in zip(pts, domain.bounds))
        resolved.append(fits and eps >= 2.0 * hmax)
    return GeneralizedGridFunction(grid, members, norm_tag="Linf",
                                   resolved=np.asarray(resolved))


def viscosity_for_dirac(d: int, q: int, grid: EpsilonGrid) -> ViscosityScale:
    """The scale eps**(d+q) that pairs with a d-dimensional mollified point
    mass: the product r_eps * sup|delta_eps| = O(eps**q) is attached as
    evidence for the vanishing-data hypothesis (it fails for q = 0)."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    net = grid.monomial(d + q)
    scale = validate_viscosity(net, exponent_hint=float(d + q))
    evidence = grid.monomial(q)
    return ViscosityScale(net=scale.net, exponent_hint=scale.exponent_hint,
                          reciprocal_class=scale.reciprocal_class,
                          hyp_evidence=evidence,
                          hyp_ok=tends_to_zero(evidence.values, tol=0.05))


# ---------------------------------------------------------------------------
# field and boundary builders
# ---------------------------------------------------------------------------

def _looks_like_path(spec: str) -> bool:
    return spec.endswith(".csv") or os.path.sep in spec or os.path.exists(spec)


def build_data(spec, domain: Domain) -> GridFunction:
    """A grid function from a constant, an expression in x (and y), or a CSV
    file whose rows match the node count."""
    if isinstance(spec, (int, float)):
        return GridFunction(domain, np.full(domain.shape, float(spec)))
    if not isinstance(spec, str):
        raise ExpressionError(f"cannot build data from {type(spec).__name__}")
    if _looks_like_path(spec):
        return read_grid_csv(spec, domain)
    names = ("x",) if domain.dimension == 1 else ("x", "y")
    fn = parse_expression(spec, variables=names)
    return domain.sample(fn)


def build_boundary(spec, domain: Domain) -> BoundaryData:
    """Boundary data from a constant, an expression, or a boundary CSV."""
    if isinstance(spec, (int, float)):
        return BoundaryData.constant(domain, float(spec))
    if not isinstance(spec, str):
        raise ExpressionError(f"cannot build boundary data from {type(spec).__name__}")
    if _looks_like_path(spec):
        return read_boundary_csv(spec, domain)
    names = ("x",) if domain.dimension == 1 else ("x", "y")
    fn = parse_expression(spec, variables=names)
    return BoundaryData.sample(domain, fn)


def constant_net(u: GridFunction, grid: EpsilonGrid) -> GeneralizedGridFunction:
    return embed_constant(u, grid)


# ---------------------------------------------------------------------------
# random data for property batteries
# ---------------------------------------------------------------------------

def random_smooth_field(domain: Domain, rng: np.random.Generator,
                        low: float = -1.0, high: float = 1.0,
                        modes: int = 3) -> GridFunction:
    """Random low-frequency Fourier field with range inside [low, high]."""
    coords = domain.coordinate_arrays()
    acc = np.zeros(domain.shape)
    for _ in range(modes):
        amp = rng.uniform(0.2, 1.0)
        if domain.dimension == 1:
            (a, b), = domain.bounds
            k = rng.integers(1, 4)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            acc = acc + amp * np.sin(k * math.pi * (coords[0] - a) / (b - a) + phase)
        else:
            (a, b), (c, e) = domain.bounds
            kx = rng.integers(1, 4)
            ky = rng.integers(1, 4)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            acc = acc + amp * np.sin(kx * math.pi * (coords[0] - a) / (b - a) + phase) \
                * np.cos(ky * math.pi * (coords[1] - c) / (e - c))
    peak = float(np.max(np.abs(acc)))
    if peak > 0.0:
        acc = acc / peak
    center = 0.5 * (low + high)
    half = 0.5 * (high - low)
    return GridFunction(domain, center + half * acc)


def random_boundary(domain: Domain, rng: np.random.Generator,
                    low: float = -1.0, high: float = 1.0) -> BoundaryData:
    field = random_smooth_field(domain, rng, low=low, high=high)
    return BoundaryData.from_grid(field)
