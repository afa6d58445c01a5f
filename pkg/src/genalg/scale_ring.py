"""Nets of reals sampled on a decreasing epsilon grid.

A net is a finite family (r_eps) indexed by a geometric-by-default grid of
eps values in (0, 1].  Classification sorts nets into polynomial-growth
("Moderate"), rapid-decay ("NegligibleCandidate", certified only up to a
finite order k_max), exact-zero-tail ("EventuallyZero") and super-polynomial
("NotModerate") classes.  Equality in the quotient ring is equality up to a
negligible difference.  Exponents follow the log-log slope convention:
r_eps ~ eps**k has exponent k, so growing nets have negative exponents.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import GridMismatchError, NotInVAPlus, PreconditionError

# Magnitudes below this are indistinguishable from exact zeros once logs are
# taken; IEEE doubles underflow around 1e-308.
ZERO_CLAMP = 1e-300

# Envelope constants are searched in [ENVELOPE_C_MIN, ENVELOPE_C_MAX].  Only
# the upper end can fail an existence check (any constant below the floor is
# subsumed by a larger admissible one).
ENVELOPE_C_MIN = 1e-6
ENVELOPE_C_MAX = 1e6

DEFAULT_K_MAX = 6
DEFAULT_TOL = 0.15
FIT_POINTS = 10
MIN_FIT_POINTS = 5

TAG_MODERATE = "Moderate"
TAG_NEGLIGIBLE = "NegligibleCandidate"
TAG_EVENTUALLY_ZERO = "EventuallyZero"
TAG_NOT_MODERATE = "NotModerate"


@dataclass(frozen=True, eq=False)
class EpsilonGrid:
    """Strictly decreasing sample of eps values in (0, 1]."""

    eps_values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eps_values, dtype=float)
        object.__setattr__(self, "eps_values", vals)
        if vals.ndim != 1 or vals.size < 9:
            raise ValueError("epsilon grid needs at least 9 values for slope fitting")
        if not np.all(np.isfinite(vals)):
            raise ValueError("epsilon grid has non-finite values")
        if np.any(vals <= 0.0) or np.any(vals > 1.0):
            raise ValueError("epsilon values must lie in (0, 1]")
        if np.any(np.diff(vals) >= 0.0):
            raise ValueError("epsilon values must be strictly decreasing")

    @classmethod
    def geometric(cls, eps0: float = 0.5, ratio: float = 0.5, levels: int = 24) -> "EpsilonGrid":
        """eps_j = eps0 * ratio**j for j = 0..levels."""
        if not 0.0 < ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        return cls(eps0 * ratio ** np.arange(levels + 1))

    @classmethod
    def default(cls) -> "EpsilonGrid":
        return cls.geometric()

    def __len__(self) -> int:
        return self.eps_values.size

    def matches(self, other: "EpsilonGrid") -> bool:
        return np.array_equal(self.eps_values, other.eps_values)

    def net(self, values: Sequence[float]) -> "RealNet":
        return RealNet(self, np.asarray(values, dtype=float))

    def monomial(self, exponent: float, coefficient: float = 1.0) -> "RealNet":
        return self.net(coefficient * self.eps_values ** exponent)

    def from_function(self, fn: Callable[[np.ndarray], np.ndarray]) -> "RealNet":
        return self.net(fn(self.eps_values))


@dataclass(frozen=True, eq=False)
class RealNet:
    """One real value per grid point."""

    grid: EpsilonGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (len(self.grid),):
            raise ValueError("net length does not match the epsilon grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("net has non-finite values")

    def __len__(self) -> int:
        return self.values.size

    def __add__(self, other: "RealNet") -> "RealNet":
        return net_add(self, other)

    def __sub__(self, other: "RealNet") -> "RealNet":
        _require_same_grid(self, other)
        return RealNet(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, RealNet):
            return net_mul(self, other)
        return net_scale(self, float(other))

    __rmul__ = __mul__

    def __abs__(self) -> "RealNet":
        return net_abs(self)


def _require_same_grid(a: RealNet, b: RealNet) -> None:
    if not a.grid.matches(b.grid):
        raise GridMismatchError("nets live on different epsilon grids")


def net_add(a: RealNet, b: RealNet) -> RealNet:
    _require_same_grid(a, b)
    return RealNet(a.grid, a.values + b.values)


def net_mul(a: RealNet, b: RealNet) -> RealNet:
    _require_same_grid(a, b)
    return RealNet(a.grid, a.values * b.values)


def net_abs(a: RealNet) -> RealNet:
    return RealNet(a.grid, np.abs(a.values))


def net_scale(a: RealNet, c: float) -> RealNet:
    return RealNet(a.grid, c * a.values)


@dataclass(frozen=True)
class ScaleClass:
    """Result of classifying a net against the polynomial growth scale."""

    tag: str
    exponent: float | None
    fit_residual: float | None
    k_max: int

    @property
    def is_moderate(self) -> bool:
        """Membership in the polynomial-growth ring (NotModerate excluded)."""
        return self.tag != TAG_NOT_MODERATE

    @property
    def is_negligible(self) -> bool:
        return self.tag in (TAG_NEGLIGIBLE, TAG_EVENTUALLY_ZERO)

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "exponent": self.exponent,
            "fit_residual": self.fit_residual,
            "k_max": self.k_max,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _window_bounds(n: int, fit_window: tuple[int, int] | None) -> tuple[int, int]:
    if fit_window is None:
        return max(0, n - FIT_POINTS), n
    lo, hi = int(fit_window[0]), int(fit_window[1])
    if lo < 0 or hi > n or hi - lo < MIN_FIT_POINTS:
        raise ValueError("fit window must contain at least 5 grid points")
    return lo, hi


def _clamped_magnitudes(values: np.ndarray) -> np.ndarray:
    mag = np.abs(np.asarray(values, dtype=float))
    mag[mag < ZERO_CLAMP] = 0.0
    return mag


def _superpolynomial_growth(x: np.ndarray, y: np.ndarray) -> bool:
    # Convex, accelerating growth of log|r| toward small eps defeats every
    # polynomial envelope; second divided differences capture exactly that.
    if x.size < 5:
        return False
    d1 = np.diff(y) / np.diff(x)
    d2 = np.diff(d1) / (x[2:] - x[:-2])
    return bool(np.all(d2 > 0.0) and d2[-1] > d2[0])


def envelope_holds(net: RealNet, exponent: float, tol: float = DEFAULT_TOL,
                   fit_window: tuple[int, int] | None = None) -> bool:
    """Whether |r_eps| <= (1+tol) * C * eps**exponent on the window for some
    admissible constant C <= ENVELOPE_C_MAX (computed in log space)."""
    lo, hi = _window_bounds(len(net), fit_window)
    mag = _clamped_magnitudes(net.values)[lo:hi]
    eps = net.grid.eps_values[lo:hi]
    nz = mag > 0.0
    if not np.any(nz):
        return True
    log_c_req = np.max(np.log(mag[nz]) - exponent * np.log(eps[nz]))
    return bool(log_c_req <= math.log(ENVELOPE_C_MAX) + math.log1p(tol))


def classify_net(net: RealNet, fit_window: tuple[int, int] | None = None,
                 k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL) -> ScaleClass:
    """Classify a net against the polynomial growth scale.

    Decision procedure: an exact-zero tail is EventuallyZero; otherwise the
    log-log slope is fitted by least squares on the window (default: the last
    10 grid points).  A large fit residual combined with positive, growing
    curvature flags super-polynomial growth (NotModerate).  The net is
    NegligibleCandidate when the decay envelope holds for every integer order
    up to k_max, Moderate when the envelope at the fitted slope holds.
    """
    mag = _clamped_magnitudes(net.values)
    if mag[-1] == 0.0:
        return ScaleClass(TAG_EVENTUALLY_ZERO, None, None, k_max)
    lo, hi = _window_bounds(len(net), fit_window)
    eps = net.grid.eps_values
    idx = np.arange(lo, hi)[mag[lo:hi] > 0.0]
    if idx.size < MIN_FIT_POINTS:
        raise ValueError("fit window has fewer than 5 nonzero points")
    x = np.log(eps[idx])
    y = np.log(mag[idx])
    slope, intercept = np.polyfit(x, y, 1)
    fit_residual = float(np.max(np.abs(y - (slope * x + intercept))))
    if fit_residual > math.log1p(tol) and _superpolynomial_growth(x, y):
        return ScaleClass(TAG_NOT_MODERATE, None, fit_residual, k_max)
    window = (lo, hi)
    if all(envelope_holds(net, k, tol, window) for k in range(1, k_max + 1)):
        return ScaleClass(TAG_NEGLIGIBLE, float(slope), fit_residual, k_max)
    if envelope_holds(net, float(slope), tol, window):
        return ScaleClass(TAG_MODERATE, float(slope), fit_residual, k_max)
    return ScaleClass(TAG_NOT_MODERATE, float(slope), fit_residual, k_max)


def gen_eq(a: RealNet, b: RealNet, k_max: int = DEFAULT_K_MAX,
           tol: float = DEFAULT_TOL) -> bool:
    """Equality in the quotient ring: the difference is negligible."""
    _require_same_grid(a, b)
    for name, net in (("a", a), ("b", b)):
        if not classify_net(net, k_max=k_max, tol=tol).is_moderate:
            raise PreconditionError(f"operand {name} is not of polynomial growth")
    diff = RealNet(a.grid, a.values - b.values)
    return classify_net(diff, k_max=k_max, tol=tol).is_negligible


def tends_to_zero(values: Sequence[float], tol: float, window: int = 5,
                  growth_factor: float = 1.2) -> bool:
    """Tail test used for association-style limits: the last `window`
    magnitudes are below tol and no step rebounds by more than the factor."""
    v = np.abs(np.asarray(values, dtype=float))
    if v.size == 0:
        return False
    tail = v[-min(window, v.size):]
    if np.any(tail >= tol):
        return False
    floor = tol * 1e-9
    return bool(np.all(tail[1:] <= growth_factor * tail[:-1] + floor))


@dataclass(frozen=True, eq=False)
class ViscosityScale:
    """A validated positive net decaying to zero with moderate reciprocal."""

    net: RealNet
    exponent_hint: float | None = None
    reciprocal_class: ScaleClass | None = None
    hyp_evidence: RealNet | None = None
    hyp_ok: bool | None = None

    @property
    def values(self) -> np.ndarray:
        return self.net.values

    @property
    def grid(self) -> EpsilonGrid:
        return self.net.grid


def validate_viscosity(r: RealNet, k_max: int = DEFAULT_K_MAX, tol: float = DEFAULT_TOL,
                       exponent_hint: float | None = None) -> ViscosityScale:
    """Check the three admissibility clauses for a viscosity scale."""
    vals = r.values
    if np.any(vals <= 0.0) or np.any(vals > 1.0):
        raise NotInVAPlus("range", "viscosity values must lie in (0, 1]")
    if vals[-1] > 0.5 * vals[0]:
        raise NotInVAPlus("limit", "net does not decay along the grid")
    tail = vals[-8:]
    if np.any(tail[1:] > 1.01 * tail[:-1]):
        raise NotInVAPlus("limit", "grid tail is not monotone decreasing")
    recip = RealNet(r.grid, 1.0 / vals)
    cls = classify_net(recip, k_max=k_max, tol=tol)
    if not cls.is_moderate:
        raise NotInVAPlus("reciprocal", "1/r is not of polynomial growth")
    return ViscosityScale(net=r, exponent_hint=exponent_hint, reciprocal_class=cls)


def check_solidity(s: RealNet, t: RealNet, k_max: int = DEFAULT_K_MAX,
                   tol: float = DEFAULT_TOL) -> bool:
    """Verify the domination property on one instance: |t| <= |s| pointwise
    and s of polynomial growth must force t into the ring, with an envelope
    certificate at s's fitted exponent (slack tol in the exponent)."""
    _require_same_grid(s, t)
    if np.any(np.abs(t.values) > np.abs(s.values) * (1.0 + 1e-12) + ZERO_CLAMP):
        raise PreconditionError("|t| <= |s| fails at some grid point")
    cs = classify_net(s, k_max=k_max, tol=tol)
    if not cs.is_moderate:
        return True  # implication is vacuous
    ct = classify_net(t, k_max=k_max, tol=tol)
    if ct.tag == TAG_EVENTUALLY_ZERO:
        return True
    if ct.tag == TAG_NOT_MODERATE:
        return False
    if cs.tag == TAG_EVENTUALLY_ZERO:
        # domination by an eventually-zero net forces an exact zero tail
        return False
    return envelope_holds(t, cs.exponent - tol, tol)


@dataclass(frozen=True, eq=False)
class PolynomialBound:
    """Polynomial families with nonnegative moderate coefficient nets, used to
    certify that a mapping family preserves polynomial growth."""

    degree: int
    coeff_nets: tuple[RealNet, ...]
    zero_constant: bool = False

    def __post_init__(self):
        if len(self.coeff_nets) != self.degree + 1:
            raise ValueError("need one coefficient net per monomial degree")
        grid = self.coeff_nets[0].grid
        for c in self.coeff_nets:
            if not c.grid.matches(grid):
                raise GridMismatchError("coefficient nets live on different grids")
            if np.any(c.values < 0.0):
                raise ValueError("coefficient nets must be nonnegative")
            if not classify_net(c, k_max=DEFAULT_K_MAX, tol=DEFAULT_TOL).is_moderate:
                raise ValueError("coefficient nets must be of polynomial growth")
        if self.zero_constant and np.any(self.coeff_nets[0].values != 0.0):
            raise ValueError("zero_constant requires an identically zero degree-0 net")

    @property
    def grid(self) -> EpsilonGrid:
        return self.coeff_nets[0].grid

    @classmethod
    def from_constant_coeffs(cls, grid: EpsilonGrid, coeffs: Sequence[float],
                             zero_constant: bool = False) -> "PolynomialBound":
        nets = tuple(grid.net(np.full(len(grid), c)) for c in coeffs)
        return cls(len(coeffs) - 1, nets, zero_constant)

    @classmethod
    def linear(cls, coeff: RealNet) -> "PolynomialBound":
        zero = coeff.grid.net(np.zeros(len(coeff.grid)))
        return cls(1, (zero, coeff), zero_constant=True)

    def evaluate(self, j: int, x: float) -> float:
        return float(sum(c.values[j] * x ** d for d, c in enumerate(self.coeff_nets)))


def check_extension_certificate(theta_values_in: RealNet, theta_values_out: RealNet,
                                psi: PolynomialBound) -> bool:
    """Pointwise-in-eps check that output norms are dominated by the
    polynomial bound applied to input norms."""
    _require_same_grid(theta_values_in, theta_values_out)
    if not psi.grid.matches(theta_values_in.grid):
        raise GridMismatchError("bound coefficients live on a different grid")
    for j in range(len(theta_values_in)):
        bound = psi.evaluate(j, abs(float(theta_values_in.values[j])))
        if float(theta_values_out.values[j]) > bound * (1.0 + 1e-12) + ZERO_CLAMP:
            return False
    return True


def write_net_csv(net: RealNet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epsilon", "value"])
        for e, v in zip(net.grid.eps_values, net.values):
            writer.writerow([f"{e:.17g}", f"{v:.17g}"])


def read_net_csv(path, grid: EpsilonGrid | None = None) -> RealNet:
    eps = []
    vals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["epsilon", "value"]:
            raise ValueError(f"{path}: expected 'epsilon,value' header")
        for row in reader:
            if not row:
                continue
            eps.append(float(row[0]))
            vals.append(float(row[1]))
    file_grid = EpsilonGrid(np.asarray(eps))
    if grid is not None:
        if not grid.matches(file_grid):
            raise GridMismatchError(f"{path}: epsilon column does not match the grid")
        file_grid = grid
    return RealNet(file_grid, np.asarray(vals))
