"""Per-wavenumber linear analysis about the coexistence equilibrium.

On (0, l*pi) with no-flux boundaries the Laplacian is diagonal in the cosine
modes cos(n x / l), so linear stability reduces to the 2x2 problems

    lambda^2 - T_n lambda + D_n = 0,   n = 0, 1, 2, ...

with trace T_n and determinant D_n below.  The Hopf curve r_n^H(l) is where
T_n vanishes and the Turing curve r_n^T(l) is where D_n vanishes.
"""

from __future__ import annotations

import cmath
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._format import fmt
from .errors import DenominatorZero
from .kinetics import ModelParams, SystemParams, linear_coefficients

__all__ = [
    "ModeQuadratic",
    "ModeEigenvalues",
    "Status",
    "StabilityVerdict",
    "trace_det",
    "mode_quadratic",
    "quadratic_roots",
    "mode_eigenvalues",
    "hopf_frequency",
    "hopf_curve",
    "turing_curve",
    "mode_cap",
    "r_star",
    "steady_state_stability",
    "curves_csv",
]


@dataclass(frozen=True)
class ModeQuadratic:
    n: int
    Tn: float
    Dn: float


@dataclass(frozen=True)
class ModeEigenvalues:
    n: int
    lambda_plus: complex
    lambda_minus: complex


class Status(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class StabilityVerdict:
    status: Status
    witnesses: list[int] = field(default_factory=list)
    threshold: float | None = None


def trace_det(system: SystemParams, r, l, n):
    """Vectorized (T_n, D_n); any argument may be an array."""
    A0, B0 = linear_coefficients(system)
    k = np.asarray(n, dtype=float) ** 2 / np.asarray(l, dtype=float) ** 2
    d1, d2 = system.d1, system.d2
    T = A0 - (d1 + d2) * k - r
    D = d2 * k * (d1 * k - A0) + r * (d1 * k - A0 - B0)
    return T, D


def mode_quadratic(params: ModelParams, n: int) -> ModeQuadratic:
    if n < 0:
        raise ValueError("mode index must be non-negative")
    T, D = trace_det(params, params.r, params.l, n)
    return ModeQuadratic(int(n), float(T), float(D))


def quadratic_roots(T: float, D: float) -> tuple[complex, complex]:
    """Roots of lambda^2 - T lambda + D, avoiding cancellation for real roots."""
    disc = T * T - 4.0 * D
    if disc < 0:
        half = 0.5 * math.sqrt(-disc)
        return complex(0.5 * T, half), complex(0.5 * T, -half)
    s = T + math.copysign(math.sqrt(disc), T)
    if s == 0.0:
        return 0j, 0j
    big = 0.5 * s
    small = D / big
    return (complex(big), complex(small)) if big >= small else (complex(small), complex(big))


def mode_eigenvalues(params: ModelParams, n: int) -> ModeEigenvalues:
    q = mode_quadratic(params, n)
    lp, lm = quadratic_roots(q.Tn, q.Dn)
    return ModeEigenvalues(q.n, lp, lm)


def hopf_frequency(system: SystemParams, n: int, l: float) -> float:
    """omega_n = sqrt(D_n) evaluated on the Hopf curve r = r_n^H(l)."""
    r = hopf_curve(system, n, l)
    _, D = trace_det(system, r, l, n)
    if D <= 0:
        raise ValueError(f"no pure imaginary pair on mode {n} at l={l}")
    return math.sqrt(float(D))


def hopf_curve(system: SystemParams, n: int, l: float) -> float:
    """r_n^H(l) = A0 - (d1 + d2) n^2 / l^2; may be negative."""
    A0, _ = linear_coefficients(system)
    return A0 - (system.d1 + system.d2) * n * n / (l * l)


def turing_curve(system: SystemParams, n: int, l: float) -> float:
    """r_n^T(l) = -d2 k (d1 k - A0) / (d1 k - A0 - B0) with k = n^2 / l^2."""
    A0, B0 = linear_coefficients(system)
    k = n * n / (l * l)
    den = system.d1 * k - A0 - B0
    if den == 0.0:
        raise DenominatorZero(f"d1 n^2/l^2 = A0 + B0 at n={n}, l={l}")
    return -system.d2 * k * (system.d1 * k - A0) / den


def mode_cap(system: SystemParams, l: float) -> int:
    """Largest mode index any scan needs to visit.

    Beyond this index T_n < 0 and D_n > 0 for every r > 0.
    """
    A0, B0 = linear_coefficients(system)
    d1 = system.d1
    return (
        math.ceil(l * math.sqrt(max(A0, 0.0) / d1))
        + math.ceil(l * math.sqrt((max(A0, 0.0) + abs(B0)) / d1))
        + 8
    )


def r_star(system: SystemParams, l: float, tie_tol: float = 1e-9) -> tuple[float, list[int]]:
    """Maximum of r_n^T(l) over n >= 1 and the modes attaining it.

    Returns ``(0.0, [])`` on the small-domain branch l <= sqrt(d1 / A0).
    """
    A0, _ = linear_coefficients(system)
    if A0 <= 0 or l <= math.sqrt(system.d1 / A0):
        return 0.0, []
    values = {n: turing_curve(system, n, l) for n in range(1, mode_cap(system, l) + 1)}
    best = max(values.values())
    if best <= 0:
        return 0.0, []
    modes = [n for n, v in values.items() if abs(v - best) <= tie_tol]
    return best, modes


def steady_state_stability(params: ModelParams, tol: float = 1e-9) -> StabilityVerdict:
    """Stability of (u0, v0) from the critical threshold max{A0, r*}.

    Witnesses are the modes whose Hopf or Turing threshold is reached,
    r <= r_n^H(l) + tol or r <= r_n^T(l) + tol.
    """
    A0, _ = linear_coefficients(params)
    r, l = params.r, params.l
    witnesses = []
    for n in range(mode_cap(params, l) + 1):
        if r <= hopf_curve(params, n, l) + tol or (n > 0 and r <= turing_curve(params, n, l) + tol):
            witnesses.append(n)
    if A0 <= 0:
        return StabilityVerdict(Status.STABLE, witnesses, None)
    threshold = max(A0, r_star(params, l)[0])
    if abs(r - threshold) <= tol:
        status = Status.MARGINAL
    elif r > threshold:
        status = Status.STABLE
    else:
        status = Status.UNSTABLE
    return StabilityVerdict(status, witnesses, threshold)


def curves_csv(system: SystemParams, modes, lengths) -> str:
    """CSV ``n,l,r_hopf,r_turing``, one row per (n, l) sample."""
    buf = io.StringIO()
    buf.write("n,l,r_hopf,r_turing\n")
    for n in modes:
        for l in lengths:
            rt = turing_curve(system, n, l) if n > 0 else 0.0
            buf.write(f"{int(n)},{fmt(l)},{fmt(hopf_curve(system, n, l))},{fmt(rt)}\n")
    return buf.getvalue()
