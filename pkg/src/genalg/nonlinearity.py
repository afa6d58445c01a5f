"""The diffusion nonlinearity: an increasing differentiable map with bounded
derivative, its viscosity regularization Phi + r*Id, and the truncation that
freezes it to affine branches outside the data bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class PhiSpec:
    """An increasing real map with bounded derivative.

    ``phi`` and ``dphi`` must accept numpy arrays; ``dphi_sup`` is the global
    sup of the derivative and ``declared_zero_set`` lists the finitely many
    points where the derivative is allowed to vanish.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    dphi_sup: float
    declared_zero_set: tuple[float, ...] = ()
    name: str = "custom"


def identity_phi() -> PhiSpec:
    return PhiSpec(
        phi=lambda s: np.asarray(s, dtype=float) * 1.0,
        dphi=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        dphi_sup=1.0,
        name="identity",
    )


def saturated_cubic() -> PhiSpec:
    """s**3 on [-1, 1], continued with slope 3 outside; derivative vanishes
    exactly at 0.  The canonical degenerate fixture."""

    def phi(s):
        s = np.asarray(s, dtype=float)
        inner = s ** 3
        outer = np.sign(s) + 3.0 * (s - np.sign(s))
        return np.where(np.abs(s) <= 1.0, inner, outer)

    def dphi(s):
        s = np.asarray(s, dtype=float)
        return 3.0 * np.minimum(s * s, 1.0)

    return PhiSpec(phi=phi, dphi=dphi, dphi_sup=3.0, declared_zero_set=(0.0,),
                   name="saturated_cubic")


def arctan_phi() -> PhiSpec:
    return PhiSpec(
        phi=np.arctan,
        dphi=lambda s: 1.0 / (1.0 + np.asarray(s, dtype=float) ** 2),
        dphi_sup=1.0,
        name="arctan",
    )


_BUILTINS = {
    "identity": identity_phi,
    "saturated_cubic": saturated_cubic,
    "arctan": arctan_phi,
}


def phi_by_name(name: str) -> PhiSpec:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown nonlinearity {name!r}; choose from "
                         f"{sorted(_BUILTINS)}") from None


def validate_phi(spec: PhiSpec, radius: float = 10.0, samples: int = 10_000,
                 zero_radius: float = 0.05) -> None:
    """Sampled sanity checks: monotone, 0 <= phi' <= sup, phi' continuous,
    phi' positive away from the declared zero set.  Raises ValueError."""
    s = np.linspace(-radius, radius, samples)
    ph = np.asarray(spec.phi(s), dtype=float)
    dp = np.asarray(spec.dphi(s), dtype=float)
    if np.any(np.diff(ph) < -1e-12):
        raise ValueError("phi is not increasing on the sample")
    if np.any(dp < -1e-12) or np.any(dp > spec.dphi_sup * (1.0 + 1e-9) + 1e-12):
        raise ValueError("phi' leaves [0, dphi_sup] on the sample")
    h = s[1] - s[0]
    jump = np.max(np.abs(np.diff(dp)))
    if jump > 0.1 * (1.0 + spec.dphi_sup):
        raise ValueError("phi' jumps on the sample; not continuous")
    # consistency of phi and dphi via central differences
    central = (ph[2:] - ph[:-2]) / (2.0 * h)
    if np.max(np.abs(central - dp[1:-1])) > 1e-2 * (1.0 + spec.dphi_sup):
        raise ValueError("dphi is inconsistent with phi on the sample")
    away = np.ones_like(s, dtype=bool)
    for z in spec.declared_zero_set:
        away &= np.abs(s - z) > zero_radius
    if np.any(dp[away] <= 0.0):
        raise ValueError("phi' vanishes outside the declared zero set")


def make_phi_eps(base: PhiSpec, r: float) -> PhiSpec:
    """The regularized nonlinearity phi + r*Id with derivative floor r > 0."""
    if r <= 0.0:
        raise ValueError("viscosity value must be positive")
    return PhiSpec(
        phi=lambda s, _p=base.phi: np.asarray(_p(s), dtype=float) + r * np.asarray(s, dtype=float),
        dphi=lambda s, _d=base.dphi: np.asarray(_d(s), dtype=float) + r,
        dphi_sup=base.dphi_sup + r,
        name=f"{base.name}+{r:g}*id",
    )


@dataclass(frozen=True)
class TruncatedPhi:
    """Regularized nonlinearity frozen to affine branches outside [m, M].

    value(x) = phi(m) + r*x for x <= m, phi(x) + r*x inside, phi(M) + r*x
    beyond M.  The derivative equals r exactly outside [m, M] and carries the
    endpoint (interior) value on the closed interval, so it is >= r
    everywhere and Lipschitz-bounded by dphi_sup + r.
    """

    base: PhiSpec
    m: float
    M: float
    r: float

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.base.phi(np.clip(x, self.m, self.M)) + self.r * x

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.m) & (x <= self.M)
        return np.where(inside, np.asarray(self.base.dphi(x), dtype=float) + self.r, self.r)

    @property
    def lipschitz(self) -> float:
        return self.base.dphi_sup + self.r


def truncate(base: PhiSpec, m: float, M: float, r: float) -> TruncatedPhi:
    if m > M:
        raise ValueError("truncation needs m <= M")
    if r <= 0.0:
        raise ValueError("viscosity value must be positive")
    return TruncatedPhi(base=base, m=float(m), M=float(M), r=float(r))
