"""Turing-Hopf normal form, its planar amplitude system and regions D1-D7.

At a Turing-Hopf point (r*, l*) the spatially homogeneous mode carries an
imaginary pair +-i omega0 and the cosine mode n* carries a zero eigenvalue.
With perturbations r = r* + alpha1, l = l* + alpha2 the third-order normal
form on the center manifold reads

    z1' = i omega0 z1 + 1/2 (f_a1z1 alpha1 + f_a2z1 alpha2) z1
          + 1/6 (g210 z1^2 conj(z1) + g102 z1 z2^2),
    z2' = 1/2 (f_a1z2 alpha1 + f_a2z2 alpha2) z2
          + 1/6 (g111 z1 conj(z1) z2 + g003 z2^3),

(plus the conjugate equation).  In amplitude coordinates z1 = rho e^{i theta}
and after rescaling, the (rho, v) dynamics are

    rho' = -rho (eps1 + a0 rho^2 + b0 v^2),
    v'   = -v   (eps2 + c0 rho^2 + d0 v^2),

with a0 = -sign Re g210 and d0 = -sign g003.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .critical_sets import enumerate_codim2
from .errors import Degenerate, NearResonance, NoTuringHopf, RegimeError, WindowEmpty
from .kinetics import ModelParams, SystemParams, TaylorCoefficients, linear_coefficients, taylor_coefficients
from .spectrum import hopf_curve, turing_curve

__all__ = [
    "TuringHopfPoint",
    "NormalFormCoefficients",
    "PlanarSystem",
    "PlanarEquilibrium",
    "PlanarEquilibria",
    "Ray",
    "BifurcationLines",
    "Region",
    "Attractor",
    "PredictedObject",
    "AttractorPrediction",
    "locate_turing_hopf",
    "normal_form_coefficients",
    "planar_reduction",
    "planar_equilibria",
    "bifurcation_lines",
    "classify_region",
    "predict_attractors",
    "planar_flow",
]

COND_LIMIT = 1e10


@dataclass(frozen=True)
class TuringHopfPoint:
    system: SystemParams
    r_star: float
    l_star: float
    hopf_mode: int
    turing_mode: int
    omega0: float

    @property
    def params(self) -> ModelParams:
        return ModelParams.from_system(self.system, self.r_star, self.l_star)


def locate_turing_hopf(
    system: SystemParams,
    l_window: tuple[float, float],
    coincidence_tol: float = 1e-5,
) -> TuringHopfPoint:
    """First point of L_TH in ``l_window`` with Hopf mode 0.

    When several Turing modes meet the Hopf line at (numerically) the same l,
    the lowest Turing mode is returned.
    """
    try:
        A0, B0 = linear_coefficients(system)
        sets = enumerate_codim2(system, l_window, coincidence_tol)
    except (RegimeError, WindowEmpty) as exc:
        raise NoTuringHopf(str(exc)) from exc
    th = sorted((p for p in sets.of_kind("TH") if p.modes[0] == 0), key=lambda p: p.l)
    if not th:
        raise NoTuringHopf(f"no Turing-Hopf point with homogeneous Hopf mode in {l_window}")
    cluster = [p for p in th if p.l - th[0].l <= coincidence_tol]
    best = min(cluster, key=lambda p: p.modes[1])
    n = best.modes[1]
    gap = abs(hopf_curve(system, 0, best.l) - turing_curve(system, n, best.l))
    if gap >= 1e-9:
        raise NoTuringHopf(f"Turing-Hopf point failed verification (gap {gap:.3g})")
    omega0 = math.sqrt(A0 * (-A0 - B0))
    return TuringHopfPoint(system, A0, best.l, 0, n, omega0)


@dataclass(frozen=True)
class NormalFormCoefficients:
    f_a1z1: complex
    f_a2z1: complex
    f_a1z2: float
    f_a2z2: float
    g210: complex
    g102: complex
    g111: float
    g003: float

    def conjugate_row(self) -> tuple[complex, complex, complex, complex]:
        """Coefficients of the conj(z1) equation."""
        return (self.f_a1z1.conjugate(), self.f_a2z1.conjugate(), self.g210.conjugate(), self.g102.conjugate())

    def to_dict(self) -> dict:
        return {
            "f_a1z1": self.f_a1z1,
            "f_a2z1": self.f_a2z1,
            "f_a1z2": self.f_a1z2,
            "f_a2z2": self.f_a2z2,
            "g210": self.g210,
            "g102": self.g102,
            "g111": self.g111,
            "g003": self.g003,
        }


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NearResonance(f"{what}: condition number {cond:.3g}")
    return np.linalg.solve(matrix, rhs)


def normal_form_coefficients(
    point: TuringHopfPoint, taylor: TaylorCoefficients | None = None
) -> NormalFormCoefficients:
    """Third-order Turing-Hopf normal form coefficients at ``point``.

    Eigenvectors are scaled to first component 1; adjoint vectors satisfy
    psi . phi = 1.  The spatial basis is the orthonormal cosine basis, and
    the second-order center-manifold terms are obtained from mode-wise linear
    solves (modes 0, n* and 2n*).
    """
    if point.hopf_mode != 0:
        raise NotImplementedError("only a homogeneous Hopf mode is supported")
    if taylor is None:
        taylor = taylor_coefficients(point.params)
    Q, C = taylor.quadratic, taylor.cubic
    sys_ = point.system
    A0, B0 = linear_coefficients(sys_)
    r, l, n, w = point.r_star, point.l_star, point.turing_mode, point.omega0
    L0 = np.array([[A0, B0], [r, -r]], dtype=float)
    D = np.diag([sys_.d1, sys_.d2])

    def Ln(m: int) -> np.ndarray:
        return L0 - (m * m / (l * l)) * D

    k = n * n / (l * l)
    q = np.array([1.0, (1j * w - A0) / B0])
    psi1 = np.array([1.0, (1j * w - A0) / r])
    psi1 = psi1 / (psi1 @ q)
    p = np.array([1.0, (sys_.d1 * k - A0) / B0])
    psi2 = np.array([1.0, (sys_.d1 * k - A0) / r])
    psi2 = psi2 / (psi2 @ p)
    qc = q.conj()
    eye = np.eye(2)

    Qpp = Q(p, p)
    w110 = -_solve(L0, Q(q, qc), "L0")
    w200 = _solve(2j * w * eye - L0, Q(q, q), "2i omega - L0")
    v101 = _solve(1j * w * eye - Ln(n), Q(q, p), "i omega - L_n")
    w0pp = -_solve(L0, Qpp, "L0")
    w2pp = -0.5 * _solve(Ln(2 * n), Qpp, "L_2n")

    scale = 6.0 / math.pi
    g210 = scale * psi1 @ (Q(q, w110) + 0.5 * Q(qc, w200) + 0.5 * C(q, q, qc))
    g102 = scale * psi1 @ (0.5 * Q(q, w0pp) + Q(p, v101) + 0.5 * C(q, p, p))
    g111 = scale * psi2 @ (Q(q, v101.conj()) + Q(qc, v101) + Q(p, w110) + C(q, qc, p))
    g003 = scale * psi2 @ (0.5 * Q(p, w0pp + w2pp) + 0.25 * C(p, p, p))

    Lr = np.array([[0.0, 0.0], [1.0, -1.0]])
    hopf_l = 2.0 * point.hopf_mode ** 2 / l ** 3 * D
    turing_l = 2.0 * n * n / l ** 3 * D
    return NormalFormCoefficients(
        f_a1z1=complex(2.0 * psi1 @ Lr @ q),
        f_a2z1=complex(2.0 * psi1 @ hopf_l @ q),
        f_a1z2=float(np.real(2.0 * psi2 @ Lr @ p)),
        f_a2z2=float(np.real(2.0 * psi2 @ turing_l @ p)),
        g210=complex(g210),
        g102=complex(g102),
        g111=float(np.real(g111)),
        g003=float(np.real(g003)),
    )


@dataclass(frozen=True)
class PlanarSystem:
    eps1: tuple[float, float]
    eps2: tuple[float, float]
    a0: float
    b0: float
    c0: float
    d0: float

    def epsilons(self, alpha1: float, alpha2: float) -> tuple[float, float]:
        e1 = self.eps1[0] * alpha1 + self.eps1[1] * alpha2
        e2 = self.eps2[0] * alpha1 + self.eps2[1] * alpha2
        return e1, e2

    @property
    def det(self) -> float:
        return self.a0 * self.d0 - self.b0 * self.c0

    def to_dict(self) -> dict:
        return {"a0": self.a0, "b0": self.b0, "c0": self.c0, "d0": self.d0,
                "eps1": list(self.eps1), "eps2": list(self.eps2)}


def planar_reduction(coeffs: NormalFormCoefficients) -> PlanarSystem:
    g210r = coeffs.g210.real
    if g210r == 0 or coeffs.g003 == 0:
        raise Degenerate("Re g210 and g003 must be nonzero")
    return PlanarSystem(
        # "+ 0.0" turns a signed zero into +0.0
        eps1=(-0.5 * coeffs.f_a1z1.real + 0.0, -0.5 * coeffs.f_a2z1.real + 0.0),
        eps2=(-0.5 * coeffs.f_a1z2 + 0.0, -0.5 * coeffs.f_a2z2 + 0.0),
        a0=-math.copysign(1.0, g210r),
        b0=-coeffs.g102.real / abs(coeffs.g003),
        c0=-coeffs.g111 / abs(g210r),
        d0=-math.copysign(1.0, coeffs.g003),
    )


def _jacobian(planar: PlanarSystem, e1: float, e2: float, rho: float, v: float) -> np.ndarray:
    a0, b0, c0, d0 = planar.a0, planar.b0, planar.c0, planar.d0
    return -np.array([
        [e1 + 3 * a0 * rho * rho + b0 * v * v, 2 * b0 * rho * v],
        [2 * c0 * rho * v, e2 + c0 * rho * rho + 3 * d0 * v * v],
    ])


@dataclass(frozen=True)
class PlanarEquilibrium:
    name: str
    exists: bool
    rho: float = math.nan
    v: float = math.nan
    jacobian: np.ndarray | None = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.jacobian)

    @property
    def stability(self) -> str:
        if not self.exists:
            return "Absent"
        re = self.eigenvalues.real
        if np.all(re < 0):
            return "Stable"
        if np.any(re > 0):
            return "Unstable"
        return "Marginal"

    @property
    def is_stable(self) -> bool:
        return self.stability == "Stable"


@dataclass(frozen=True)
class PlanarEquilibria:
    E1: PlanarEquilibrium
    E2: PlanarEquilibrium
    E3: PlanarEquilibrium
    E4: PlanarEquilibrium

    def __iter__(self):
        return iter((self.E1, self.E2, self.E3, self.E4))


def planar_equilibria(planar: PlanarSystem, alpha1: float, alpha2: float) -> PlanarEquilibria:
    e1, e2 = planar.epsilons(alpha1, alpha2)
    a0, b0, c0, d0 = planar.a0, planar.b0, planar.c0, planar.d0

    def make(name, exists, rho, v):
        if not exists:
            return PlanarEquilibrium(name, False)
        return PlanarEquilibrium(name, True, rho, v, _jacobian(planar, e1, e2, rho, v))

    E1 = make("E1", True, 0.0, 0.0)
    rho2 = -e1 / a0
    E2 = make("E2", rho2 > 0, math.sqrt(max(rho2, 0.0)), 0.0)
    v2 = -e2 / d0
    E3 = make("E3", v2 > 0, 0.0, math.sqrt(max(v2, 0.0)))
    det = planar.det
    if det == 0:
        E4 = make("E4", False, 0.0, 0.0)
    else:
        r4 = (b0 * e2 - d0 * e1) / det
        v4 = (c0 * e1 - a0 * e2) / det
        E4 = make("E4", r4 > 0 and v4 > 0, math.sqrt(max(r4, 0.0)), math.sqrt(max(v4, 0.0)))
    return PlanarEquilibria(E1, E2, E3, E4)


def planar_flow(planar: PlanarSystem, alpha: tuple[float, float], state: tuple[float, float]) -> tuple[float, float]:
    rho, v = state
    if rho < 0 or v < 0:
        raise ValueError("amplitudes must be non-negative")
    e1, e2 = planar.epsilons(*alpha)
    drho = -rho * (e1 + planar.a0 * rho * rho + planar.b0 * v * v)
    dv = -v * (e2 + planar.c0 * rho * rho + planar.d0 * v * v)
    return drho, dv


@dataclass(frozen=True)
class Ray:
    """Half-line {t (cos angle, sin angle), t > 0} in the (alpha1, alpha2) plane."""

    name: str
    angle: float

    @property
    def direction(self) -> tuple[float, float]:
        return math.cos(self.angle), math.sin(self.angle)

    @property
    def slope(self) -> float:
        c, s = self.direction
        return s / c if abs(c) > 1e-15 else math.copysign(math.inf, s)

    @property
    def alpha1_sign(self) -> int:
        c = self.direction[0]
        return 0 if abs(c) < 1e-12 else (1 if c > 0 else -1)

    def to_dict(self) -> dict:
        d = {"alpha1_sign": self.alpha1_sign, "angle": self.angle}
        if self.alpha1_sign == 0:
            d["alpha2_sign"] = 1 if self.direction[1] > 0 else -1
        else:
            d["slope"] = self.slope
        return d


@dataclass(frozen=True)
class BifurcationLines:
    L1: Ray
    L2: Ray
    L3: Ray
    L4: Ray
    L5: Ray
    L6: Ray
    L7: Ray

    def __iter__(self):
        return iter((self.L1, self.L2, self.L3, self.L4, self.L5, self.L6, self.L7))

    def to_dict(self) -> dict:
        return {ray.name: ray.to_dict() for ray in self}


def _zero_ray(w: tuple[float, float], side) -> float:
    """Angle of the half of {w . alpha = 0} on which ``side(alpha)`` holds."""
    d = np.array([-w[1], w[0]])
    if np.allclose(d, 0):
        raise Degenerate("vanishing linear functional")
    if not side(d):
        d = -d
        if not side(d):
            raise Degenerate("neither half-line satisfies the side condition")
    return math.atan2(d[1], d[0])


def _e4_trace_det(planar: PlanarSystem, theta: float):
    eqs = planar_equilibria(planar, math.cos(theta), math.sin(theta))
    if not eqs.E4.exists:
        return None
    J = eqs.E4.jacobian
    return float(np.trace(J)), float(np.linalg.det(J))


def bifurcation_lines(planar: PlanarSystem, samples: int = 7200) -> BifurcationLines:
    """The seven rays bounding regions D1-D7.

    L1/L4: eps1 = 0 (eps2 > 0 / eps2 < 0); L2/L6: eps2 = 0 (eps1 < 0 / eps1 > 0);
    L3: E4 meets E2 (c0 eps1 = a0 eps2, eps1 < 0); L7: E4 meets E3
    (b0 eps2 = d0 eps1, E3 present); L5: Hopf of E4 (trace J(E4) = 0, det > 0).
    """
    if planar.det == 0:
        raise Degenerate("a0 d0 - b0 c0 = 0")
    e1w, e2w = planar.eps1, planar.eps2

    def eps(d):
        return planar.epsilons(d[0], d[1])

    L1 = _zero_ray(e1w, lambda d: eps(d)[1] > 0)
    L4 = _zero_ray(e1w, lambda d: eps(d)[1] < 0)
    L2 = _zero_ray(e2w, lambda d: eps(d)[0] < 0)
    L6 = _zero_ray(e2w, lambda d: eps(d)[0] > 0)
    w3 = (planar.c0 * e1w[0] - planar.a0 * e2w[0], planar.c0 * e1w[1] - planar.a0 * e2w[1])
    L3 = _zero_ray(w3, lambda d: eps(d)[0] * planar.a0 < 0)
    w7 = (planar.b0 * e2w[0] - planar.d0 * e1w[0], planar.b0 * e2w[1] - planar.d0 * e1w[1])
    L7 = _zero_ray(w7, lambda d: -eps(d)[1] / planar.d0 > 0)

    thetas = np.linspace(-math.pi, math.pi, samples + 1)
    values = [_e4_trace_det(planar, t) for t in thetas]
    L5 = None
    for t0, t1, v0, v1 in zip(thetas[:-1], thetas[1:], values[:-1], values[1:]):
        if v0 is None or v1 is None or v0[1] <= 0 or v1[1] <= 0:
            continue
        if v0[0] == 0 or v0[0] * v1[0] < 0:
            L5 = brentq(lambda t: _e4_trace_det(planar, t)[0], t0, t1, xtol=1e-14) if v0[0] else t0
            break
    if L5 is None:
        raise Degenerate("E4 has no Hopf ray in this planar system")
    names = ("L1", "L2", "L3", "L4", "L5", "L6", "L7")
    return BifurcationLines(*(Ray(nm, ang) for nm, ang in zip(names, (L1, L2, L3, L4, L5, L6, L7))))


class Region(str, enum.Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4 = "D4"
    D5 = "D5"
    D6 = "D6"
    D7 = "D7"
    ON_BOUNDARY = "OnBoundary"


_SECTORS = {
    frozenset({"L1", "L7"}): Region.D1,
    frozenset({"L7", "L6"}): Region.D7,
    frozenset({"L6", "L5"}): Region.D6,
    frozenset({"L5", "L4"}): Region.D5,
    frozenset({"L4", "L3"}): Region.D4,
    frozenset({"L3", "L2"}): Region.D3,
    frozenset({"L2", "L1"}): Region.D2,
}


def _sector(lines: BifurcationLines, theta: float, tol: float):
    """Neighbouring rays (below, above) of angle theta, or None on a ray."""
    two_pi = 2 * math.pi
    rays = sorted(lines, key=lambda ray: ray.angle % two_pi)
    for ray in rays:
        diff = (theta - ray.angle + math.pi) % two_pi - math.pi
        if abs(diff) <= tol:
            return None
    t = theta % two_pi
    below = [ray for ray in rays if ray.angle % two_pi < t]
    lo = below[-1] if below else rays[-1]
    hi = rays[(rays.index(lo) + 1) % len(rays)]
    return lo, hi


def classify_region(
    planar: PlanarSystem,
    alpha1: float,
    alpha2: float,
    lines: BifurcationLines | None = None,
    tol: float = 1e-9,
) -> Region:
    """Region of (alpha1, alpha2) from the two rays bounding its angular sector."""
    if alpha1 == 0 and alpha2 == 0:
        raise ValueError("the organizing center (0, 0) belongs to no region")
    lines = lines or bifurcation_lines(planar)
    pair = _sector(lines, math.atan2(alpha2, alpha1), tol)
    if pair is None:
        return Region.ON_BOUNDARY
    region = _SECTORS.get(frozenset({pair[0].name, pair[1].name}))
    if region is None:
        raise Degenerate(f"rays {pair[0].name}, {pair[1].name} are adjacent, an unexpected arrangement")
    return region


class Attractor(str, enum.Enum):
    CONSTANT_STEADY = "ConstantSteady"
    NONCONSTANT_STEADY = "NonconstantSteady"
    HOMOGENEOUS_PERIODIC = "HomogeneousPeriodic"
    INHOMOGENEOUS_PERIODIC = "InhomogeneousPeriodic"
    INHOMOGENEOUS_QUASI_PERIODIC = "InhomogeneousQuasiPeriodic"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class PredictedObject:
    kind: Attractor
    count: int
    stable: bool
    source: str


@dataclass(frozen=True)
class AttractorPrediction:
    region: Region
    objects: tuple[PredictedObject, ...]

    @property
    def stable(self) -> frozenset[Attractor]:
        return frozenset(o.kind for o in self.objects if o.stable)

    def to_dict(self) -> dict:
        return {
            "region": self.region.value,
            "objects": [
                {"kind": o.kind.value, "count": o.count, "stable": o.stable, "source": o.source}
                for o in self.objects
            ],
        }


# planar object -> (PDE object, multiplicity)
_TABLE = {
    "E1": (Attractor.CONSTANT_STEADY, 1),
    "E2": (Attractor.HOMOGENEOUS_PERIODIC, 1),
    "E3": (Attractor.NONCONSTANT_STEADY, 2),
    "E4": (Attractor.INHOMOGENEOUS_PERIODIC, 2),
}


def _bisector(lines: BifurcationLines, region: Region) -> float:
    two_pi = 2 * math.pi
    rays = sorted(lines, key=lambda ray: ray.angle % two_pi)
    for k, lo in enumerate(rays):
        hi = rays[(k + 1) % len(rays)]
        if _SECTORS.get(frozenset({lo.name, hi.name})) is region:
            width = (hi.angle - lo.angle) % two_pi
            return lo.angle + 0.5 * width
    raise Degenerate(f"no sector for {region.value}")


def predict_attractors(
    planar: PlanarSystem,
    region: Region,
    lines: BifurcationLines | None = None,
) -> AttractorPrediction:
    """Translate the planar phase portrait of ``region`` into PDE objects.

    The portrait is evaluated on the bisector of the region's sector.  Each
    existing equilibrium maps to its PDE counterpart; when E4 exists and is a
    repelling focus or node (trace and determinant positive) the planar flow
    carries a periodic orbit around it, i.e. a stable invariant torus of the
    PDE (spatially inhomogeneous quasi-periodic solutions, two by symmetry).
    """
    if region is Region.ON_BOUNDARY:
        raise ValueError("no prediction on a bifurcation line")
    lines = lines or bifurcation_lines(planar)
    theta = _bisector(lines, region)
    eqs = planar_equilibria(planar, math.cos(theta), math.sin(theta))
    objects = []
    for eq in eqs:
        if eq.exists:
            kind, count = _TABLE[eq.name]
            objects.append(PredictedObject(kind, count, eq.is_stable, eq.name))
    if eqs.E4.exists:
        J = eqs.E4.jacobian
        if np.trace(J) > 0 and np.linalg.det(J) > 0:
            objects.append(PredictedObject(Attractor.INHOMOGENEOUS_QUASI_PERIODIC, 2, True, "cycle around E4"))
    return AttractorPrediction(region, tuple(objects))
