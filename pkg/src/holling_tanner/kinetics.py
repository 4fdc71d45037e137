"""Dimensionless Holling-Tanner kinetics.

The reaction terms are

    f1(u, v) = u (1 - u) - a u v / (u + b)
    f2(u, v) = r v (1 - v / u)

and the PDE lives on the interval (0, l*pi) with no-flux boundaries.  This
module holds the parameter containers, the coexistence equilibrium, its
linearization and the hand-differentiated Taylor coefficients used by the
normal-form computation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

import numpy as np

from ._format import fmt
from .errors import Singularity, ValidationError

__all__ = [
    "SystemParams",
    "ModelParams",
    "Equilibrium",
    "Linearization",
    "TaylorCoefficients",
    "nondimensionalize",
    "a0_sign_threshold",
    "equilibrium",
    "boundary_equilibrium",
    "linear_coefficients",
    "linearize",
    "taylor_coefficients",
    "kinetics_rhs",
]


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value)):
            raise ValidationError(f"{name} must be a finite number, got {value!r}")
        if value <= 0:
            raise ValidationError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Kinetic and diffusion parameters (everything except r and l)."""

    a: float
    b: float
    d1: float
    d2: float

    def __post_init__(self) -> None:
        _require_positive(a=self.a, b=self.b, d1=self.d1, d2=self.d2)
        if not self.b < 1:
            raise ValidationError(f"b must satisfy 0 < b < 1, got {self.b!r}")

    @property
    def system(self) -> SystemParams:
        return SystemParams(self.a, self.b, self.d1, self.d2)


@dataclass(frozen=True)
class ModelParams(SystemParams):
    """Full parameter set: kinetics, diffusion, birth ratio r and domain scale l.

    The spatial domain is the interval (0, l*pi).
    """

    r: float
    l: float

    def __post_init__(self) -> None:
        super().__post_init__()
        _require_positive(r=self.r, l=self.l)

    @classmethod
    def from_system(cls, system: SystemParams, r: float, l: float) -> ModelParams:
        return cls(system.a, system.b, system.d1, system.d2, r, l)

    @classmethod
    def unchecked(cls, **values: float) -> ModelParams:
        """Build without validation (test harnesses, e.g. zero diffusion)."""
        obj = object.__new__(cls)
        for f in fields(cls):
            object.__setattr__(obj, f.name, float(values[f.name]))
        return obj

    def shifted(self, dr: float = 0.0, dl: float = 0.0) -> ModelParams:
        return ModelParams(self.a, self.b, self.d1, self.d2, self.r + dr, self.l + dl)

    def to_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    def to_json(self) -> str:
        body = ", ".join(f'"{k}": {fmt(v)}' for k, v in self.to_dict().items())
        return "{" + body + "}"

    @classmethod
    def from_dict(cls, data: dict) -> ModelParams:
        expected = {f.name for f in fields(cls)}
        unknown = set(data) - expected
        missing = expected - set(data)
        if unknown:
            raise ValidationError(f"unknown parameter keys: {sorted(unknown)}")
        if missing:
            raise ValidationError(f"missing parameter keys: {sorted(missing)}")
        return cls(**{k: float(data[k]) for k in expected})

    @classmethod
    def from_json(cls, text: str) -> ModelParams:
        return cls.from_dict(json.loads(text))


def nondimensionalize(r1, r2, k, q, m, gamma, D1, D2) -> tuple[SystemParams, float]:
    """Map dimensional rates to ``(SystemParams(a, b, d1, d2), r)``.

    d1 = D1/r1, d2 = D2/r1, a = q*gamma/r1, r = r2/r1, b = m/k.
    """
    _require_positive(r1=r1, r2=r2, k=k, q=q, m=m, gamma=gamma, D1=D1, D2=D2)
    if m >= k:
        raise ValidationError(f"half-saturation m={m!r} must be below carrying capacity k={k!r}")
    system = SystemParams(a=q * gamma / r1, b=m / k, d1=D1 / r1, d2=D2 / r1)
    return system, r2 / r1


def a0_sign_threshold(b: float) -> float:
    """The value of a at which A0 changes sign, (b+1)^2 / (2(1-b))."""
    return (b + 1.0) ** 2 / (2.0 * (1.0 - b))


@dataclass(frozen=True)
class Equilibrium:
    u0: float
    v0: float


def _u0(a: float, b: float) -> float:
    s = a + b - 1.0
    root = math.sqrt(s * s + 4.0 * b)
    if s <= 0:
        return 0.5 * (root - s)
    # rationalized form avoids cancellation when a + b >> 1
    return 2.0 * b / (s + root)


def equilibrium(params: SystemParams) -> Equilibrium:
    """Coexistence equilibrium u0 = v0, the root in (0, 1) of (u-1)(u+b) + a u = 0."""
    u0 = _u0(params.a, params.b)
    return Equilibrium(u0, u0)


def boundary_equilibrium() -> Equilibrium:
    """The prey-only steady state (1, 0); always unstable, not analysed further."""
    return Equilibrium(1.0, 0.0)


def linear_coefficients(params: SystemParams) -> tuple[float, float]:
    """Return ``(A0, B0)``, the prey-row entries of the Jacobian at (u0, v0)."""
    b = params.b
    u0 = _u0(params.a, b)
    A0 = u0 * (1.0 - b - 2.0 * u0) / (b + u0)
    B0 = u0 - 1.0
    return A0, B0


@dataclass(frozen=True)
class Linearization:
    A0: float
    B0: float
    r: float | None = None

    @property
    def jac(self) -> np.ndarray:
        if self.r is None:
            raise ValidationError("Jacobian requires the birth ratio r")
        return np.array([[self.A0, self.B0], [self.r, -self.r]])


def linearize(params: SystemParams, r: float | None = None) -> Linearization:
    if r is None:
        r = getattr(params, "r", None)
    A0, B0 = linear_coefficients(params)
    return Linearization(A0, B0, r)


@dataclass(frozen=True)
class TaylorCoefficients:
    """Partial derivatives of (f1, f2) at the coexistence equilibrium.

    ``jac[k, i]``, ``hess[k, i, j]`` and ``third[k, i, j, m]`` hold the first,
    second and third derivatives of component ``k`` with variable indices
    0 = u, 1 = v.
    """

    jac: np.ndarray
    hess: np.ndarray
    third: np.ndarray

    def partial(self, component: int, nu: int, nv: int) -> float:
        """Derivative of f_{component+1}, ``nu`` times in u and ``nv`` times in v."""
        idx = (0,) * nu + (1,) * nv
        order = nu + nv
        table = {1: self.jac, 2: self.hess, 3: self.third}.get(order)
        if table is None:
            raise ValueError(f"order {order} not stored")
        return float(table[(component, *idx)])

    def quadratic(self, x, y) -> np.ndarray:
        """Symmetric bilinear form sum_ij d2f/dx_i dx_j x_i y_j."""
        return np.einsum("kij,i,j->k", self.hess, x, y)

    def cubic(self, x, y, z) -> np.ndarray:
        return np.einsum("kijm,i,j,m->k", self.third, x, y, z)


def taylor_coefficients(params: ModelParams) -> TaylorCoefficients:
    a, b, r = params.a, params.b, params.r
    u = v = _u0(a, b)
    w = u + b
    # g(u) = u / (u + b) and its derivatives
    g = u / w
    g1 = b / w**2
    g2 = -2.0 * b / w**3
    g3 = 6.0 * b / w**4

    jac = np.array([
        [1.0 - 2.0 * u - a * v * g1, -a * g],
        [r * v**2 / u**2, r - 2.0 * r * v / u],
    ])
    hess = np.zeros((2, 2, 2))
    hess[0, 0, 0] = -2.0 - a * v * g2
    hess[0, 0, 1] = hess[0, 1, 0] = -a * g1
    hess[1, 0, 0] = -2.0 * r * v**2 / u**3
    hess[1, 0, 1] = hess[1, 1, 0] = 2.0 * r * v / u**2
    hess[1, 1, 1] = -2.0 * r / u

    third = np.zeros((2, 2, 2, 2))
    f1_uuu = -a * v * g3
    f1_uuv = -a * g2
    f2_uuu = 6.0 * r * v**2 / u**4
    f2_uuv = -4.0 * r * v / u**3
    f2_uvv = 2.0 * r / u**2
    for i in range(2):
        for j in range(2):
            for m in range(2):
                nv = i + j + m
                third[0, i, j, m] = {0: f1_uuu, 1: f1_uuv}.get(nv, 0.0)
                third[1, i, j, m] = {0: f2_uuu, 1: f2_uuv, 2: f2_uvv}.get(nv, 0.0)
    return TaylorCoefficients(jac, hess, third)


def kinetics_rhs(u, v, params: ModelParams):
    """Reaction terms (f1, f2); ``u`` and ``v`` may be scalars or arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u <= 0):
        raise Singularity("prey density must stay positive (f2 divides by u)")
    a, b, r = params.a, params.b, params.r
    du = u * (1.0 - u) - a * u * v / (u + b)
    dv = r * v * (1.0 - v / u)
    if du.ndim == 0:
        return float(du), float(dv)
    return du, dv
