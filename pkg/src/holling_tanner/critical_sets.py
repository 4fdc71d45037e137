"""Critical domain sizes, codimension-two sets and the A0-versus-r* regimes.

With x = n^2 / l^2 the Turing and Hopf curves are r_n^T(l) = g1(x) and
r_n^H(l) = g2(x), where

    g1(x) = d2 x (A0 - d1 x) / (d1 x - A0 - B0),    g2(x) = A0 - (d1 + d2) x.

Everything here assumes A0 > 0; below that threshold (u0, v0) is stable for
all r and l and there is nothing to classify.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotApplicable, RegimeError, WindowEmpty
from .kinetics import SystemParams, linear_coefficients
from .spectrum import hopf_curve, r_star, turing_curve

__all__ = [
    "GeometricAux",
    "RegimeThresholds",
    "Ordering",
    "CriticalLengths",
    "ModeCounts",
    "Codim2Point",
    "CodimTwoSets",
    "RegimeLabel",
    "g1",
    "g2",
    "h3",
    "aux_points",
    "regime_thresholds",
    "a_thresholds",
    "compare_A0_g1hat",
    "critical_lengths",
    "mode_counts",
    "count_windows",
    "enumerate_codim2",
    "classify_regime",
    "regime_report",
]

INTEGRALITY_TOL = 1e-9


def _positive_A0(system: SystemParams) -> tuple[float, float]:
    A0, B0 = linear_coefficients(system)
    if A0 <= 0:
        raise RegimeError(f"A0 = {A0:.6g} <= 0: (u0, v0) is stable for every r and l")
    return A0, B0


def g1(system: SystemParams, x):
    A0, B0 = linear_coefficients(system)
    x = np.asarray(x, dtype=float)
    return system.d2 * x * (A0 - system.d1 * x) / (system.d1 * x - A0 - B0)


def g2(system: SystemParams, x):
    A0, _ = linear_coefficients(system)
    return A0 - (system.d1 + system.d2) * np.asarray(x, dtype=float)


def h3(a: float, b: float, d1: float, d2: float) -> float:
    """Quadratic in a whose sign is that of A0 - g1(x_hat) when d1 < d2."""
    s4 = (d1 + d2) ** 4
    m4 = (d1 - d2) ** 4
    return (s4 - m4) * a * a + 2.0 * s4 * (b - 1.0) * a + s4 * (b + 1.0) ** 2


def _h3_scale(a: float, b: float, d1: float, d2: float) -> float:
    s4 = (d1 + d2) ** 4
    m4 = (d1 - d2) ** 4
    return (s4 + m4) * a * a + 2.0 * s4 * abs(b - 1.0) * a + s4 * (b + 1.0) ** 2


@dataclass(frozen=True)
class GeometricAux:
    x_hat: float
    x_bar: float
    g1_at_xhat: float
    x_minus: float | None = None
    x_plus: float | None = None


def aux_points(system: SystemParams) -> GeometricAux:
    """Peak of g1, the g1/g2 intersection, and the roots of A0 = g1(x)."""
    A0, B0 = _positive_A0(system)
    d1, d2 = system.d1, system.d2
    c = A0 + B0  # always negative
    # roots written without cancellation between terms of opposite sign
    x_hat = -c * A0 / (d1 * (math.sqrt(B0 * c) - c))
    beta = 2.0 * d1 * A0 + (d1 + d2) * B0
    root = math.sqrt(beta * beta - 4.0 * d1 * d1 * A0 * c)
    x_bar = (beta + root) / (2.0 * d1 * d1) if beta >= 0 else 2.0 * A0 * c / (beta - root)
    peak = float(g1(system, x_hat))
    x_minus = x_plus = None
    disc = (d2 - d1) ** 2 * A0 * A0 + 4.0 * d1 * d2 * A0 * c
    if d2 > d1 and disc > 0:
        x_plus = ((d2 - d1) * A0 + math.sqrt(disc)) / (2.0 * d1 * d2)
        x_minus = -A0 * c / (d1 * d2 * x_plus)
    return GeometricAux(x_hat, x_bar, peak, x_minus, x_plus)


@dataclass(frozen=True)
class RegimeThresholds:
    b_star: float
    a_minus: float | None = None
    a_plus: float | None = None

    @property
    def has_a(self) -> bool:
        return self.a_minus is not None


def _b_star(d1: float, d2: float) -> float:
    s4 = (d1 + d2) ** 4
    m4 = (d1 - d2) ** 4
    # [sqrt(s4) - sqrt(s4 - m4)]^2 / m4, rationalized so d1 = d2 gives 0
    return m4 / (math.sqrt(s4) + math.sqrt(s4 - m4)) ** 2


def a_thresholds(b: float, d1: float, d2: float) -> tuple[float, float]:
    """The roots a_- <= a_+ of h3; only meaningful for d1 < d2 and b <= b*."""
    if d1 >= d2:
        raise NotApplicable("a_-/a_+ are only defined for d1 < d2")
    s4 = (d1 + d2) ** 4
    m4 = (d1 - d2) ** 4
    inner = (b + 1.0) ** 2 * m4 - 4.0 * b * s4
    if inner < 0:
        if inner > -1e-12 * s4:
            inner = 0.0
        else:
            raise NotApplicable(f"b = {b} exceeds b* = {_b_star(d1, d2)}: h3 has no real roots")
    root = (d1 + d2) ** 2 * math.sqrt(inner)
    den = s4 - m4
    return ((1.0 - b) * s4 - root) / den, ((1.0 - b) * s4 + root) / den


def regime_thresholds(b: float, d1: float, d2: float) -> RegimeThresholds:
    bs = _b_star(d1, d2)
    try:
        am, ap = a_thresholds(b, d1, d2)
    except NotApplicable:
        return RegimeThresholds(bs)
    return RegimeThresholds(bs, am, ap)


class Ordering(str, enum.Enum):
    LESS = "Less"
    EQUAL = "Equal"
    GREATER = "Greater"


def compare_A0_g1hat(system: SystemParams, tol: float = 1e-9) -> Ordering:
    """Order A0 against the peak of g1 through the sign of h3."""
    _positive_A0(system)
    a, b, d1, d2 = system.a, system.b, system.d1, system.d2
    if d1 >= d2:
        return Ordering.GREATER
    value = h3(a, b, d1, d2)
    if abs(value) <= tol * _h3_scale(a, b, d1, d2):
        return Ordering.EQUAL
    return Ordering.GREATER if value > 0 else Ordering.LESS


@dataclass(frozen=True)
class CriticalLengths:
    l_hopf: float
    l_turing: float
    l_minus: float | None = None
    l_plus: float | None = None


def critical_lengths(system: SystemParams, n: int) -> CriticalLengths:
    """l_n^H, l_n^T and, when A0 < g1(x_hat), l_n^- and l_n^+."""
    A0, _ = _positive_A0(system)
    aux = aux_points(system)
    lm = lp = None
    if aux.x_minus is not None:
        lm = n / math.sqrt(aux.x_minus)
        lp = n / math.sqrt(aux.x_plus)
    return CriticalLengths(n / math.sqrt(aux.x_bar), n * math.sqrt(system.d1 / A0), lm, lp)


def _near_int(y: float, tol: float) -> int | None:
    k = round(y)
    return int(k) if abs(y - k) <= tol else None


def _count_left_open(y: float, tol: float) -> int:
    """Largest N with N < y (so l_N < l <= l_{N+1} when y = l / l_1)."""
    k = _near_int(y, tol)
    return k - 1 if k is not None else math.ceil(y) - 1


@dataclass(frozen=True)
class ModeCounts:
    N1: int
    N2: int
    M1: int | None = None
    M2: int | None = None

    @property
    def window(self) -> range:
        """Modes with r_n^T(l) > A0 (empty when M1 > M2)."""
        if self.M1 is None:
            return range(0)
        return range(self.M1, self.M2 + 1)


def mode_counts(system: SystemParams, l: float, tol: float = INTEGRALITY_TOL) -> ModeCounts:
    A0, _ = _positive_A0(system)
    aux = aux_points(system)
    N1 = _count_left_open(l * math.sqrt(aux.x_bar), tol)
    N2 = _count_left_open(l * math.sqrt(A0 / system.d1), tol)
    if aux.x_minus is None:
        return ModeCounts(N1, N2)
    ym = l * math.sqrt(aux.x_minus)
    k = _near_int(ym, tol)
    M1 = (k if k is not None else math.floor(ym)) + 1
    M2 = _count_left_open(l * math.sqrt(aux.x_plus), tol)
    return ModeCounts(N1, N2, M1, M2)


def count_windows(system: SystemParams, l: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """The windows S1 (N2 constant) and S2 (N1 and N2 constant) containing l."""
    counts = mode_counts(system, l)
    first = critical_lengths(system, 1)
    s1 = (counts.N2 * first.l_turing, (counts.N2 + 1) * first.l_turing)
    s2 = (max(s1[0], counts.N1 * first.l_hopf), min(s1[1], (counts.N1 + 1) * first.l_hopf))
    return s1, s2


@dataclass(frozen=True)
class Codim2Point:
    kind: str  # "TT", "TH" or "TTH"
    l: float
    modes: tuple[int, ...]
    r: float


@dataclass
class CodimTwoSets:
    points: list[Codim2Point] = field(default_factory=list)
    merge_tol: float = 1e-5

    def _lengths(self, kind: str) -> list[float]:
        out: list[float] = []
        for p in sorted((p for p in self.points if p.kind == kind), key=lambda p: p.l):
            if not out or p.l - out[-1] > self.merge_tol:
                out.append(p.l)
        return out

    def of_kind(self, kind: str) -> list[Codim2Point]:
        return [p for p in self.points if p.kind == kind]

    @property
    def L_TT(self) -> list[float]:
        return self._lengths("TT")

    @property
    def L_TH(self) -> list[float]:
        return self._lengths("TH")

    @property
    def L_TTH(self) -> list[float]:
        return self._lengths("TTH")

    def to_dict(self) -> dict:
        def rows(kind):
            return [{"l": p.l, "modes": list(p.modes), "r": p.r} for p in self.of_kind(kind)]
        return {"L_TT": rows("TT"), "L_TH": rows("TH"), "L_TTH": rows("TTH")}


def _positive_real_roots(poly: np.polynomial.Polynomial) -> list[float]:
    coef = poly.coef
    if np.all(coef == 0):
        return []
    # companion-matrix eigenvalues, then Newton polish in s
    roots = np.roots(coef[::-1])
    deriv = poly.deriv()
    out = []
    for z in roots:
        if abs(z.imag) > 1e-9 * max(1.0, abs(z)) or z.real <= 0:
            continue
        s = z.real
        for _ in range(4):
            d = deriv(s)
            if d == 0:
                break
            s -= poly(s) / d
        out.append(s)
    return out


def enumerate_codim2(
    system: SystemParams,
    l_window: tuple[float, float],
    coincidence_tol: float = 1e-5,
    verify_tol: float = 1e-9,
) -> CodimTwoSets:
    """All Turing-Turing, Turing-Hopf and triple coincidences with l in (lo, hi].

    Each pairwise equality is cleared of denominators into a quadratic in
    s = 1/l^2 and solved through its companion matrix.  Index constraints
    (1 <= i < j <= N2 for TT, 0 <= i <= N1 < j <= N2 for TH) are checked at
    each root.  Triple points are TH pairs (i, j), (i, k) whose lengths agree
    within ``coincidence_tol``.
    """
    A0, B0 = _positive_A0(system)
    lo, hi = l_window
    if not (0 <= lo < hi and math.isfinite(hi)):
        raise ValueError(f"invalid window {l_window!r}")
    d1, d2 = system.d1, system.d2
    c = A0 + B0
    top = mode_counts(system, hi)
    if top.N2 < 1:
        raise WindowEmpty(f"no Turing-unstable modes for l <= {hi}")
    P = np.polynomial.Polynomial
    found: list[Codim2Point] = []

    def in_window(l):
        return lo < l <= hi

    for i in range(1, top.N2 + 1):
        for j in range(i + 1, top.N2 + 1):
            poly = P([A0 * c, -d1 * c * (i * i + j * j), d1 * d1 * i * i * j * j])
            for s in _positive_real_roots(poly):
                l = 1.0 / math.sqrt(s)
                if not in_window(l):
                    continue
                ri, rj = turing_curve(system, i, l), turing_curve(system, j, l)
                if j > mode_counts(system, l).N2 or abs(ri - rj) > verify_tol * max(1.0, abs(ri)):
                    continue
                found.append(Codim2Point("TT", l, (i, j), ri))

    th: list[Codim2Point] = []
    for i in range(0, top.N1 + 1):
        for j in range(1, top.N2 + 1):
            poly = P([A0, -(d1 + d2) * i * i]) * P([-c, d1 * j * j]) + P([0.0, d2 * j * j]) * P([-A0, d1 * j * j])
            for s in _positive_real_roots(poly):
                l = 1.0 / math.sqrt(s)
                if not in_window(l):
                    continue
                counts = mode_counts(system, l)
                if not (i <= counts.N1 < j <= counts.N2):
                    continue
                rh, rt = hopf_curve(system, i, l), turing_curve(system, j, l)
                if abs(rh - rt) > verify_tol * max(1.0, abs(rh)) or rh <= 0:
                    continue
                th.append(Codim2Point("TH", l, (i, j), rh))
    found.extend(th)

    for p in th:
        for q in th:
            if p.modes[0] == q.modes[0] and p.modes[1] < q.modes[1] and abs(p.l - q.l) <= coincidence_tol:
                l = 0.5 * (p.l + q.l)
                found.append(Codim2Point("TTH", l, (p.modes[0], p.modes[1], q.modes[1]), hopf_curve(system, p.modes[0], l)))

    found.sort(key=lambda p: (p.l, p.kind, p.modes))
    return CodimTwoSets(found, coincidence_tol)


class RegimeLabel(str, enum.Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    A5 = "A5"
    A5p = "A5'"
    A6 = "A6"
    A6p = "A6'"
    A6pp = "A6''"

    @property
    def a0_exceeds_rstar(self) -> bool:
        return self in _GREATER

    @property
    def a0_equals_rstar(self) -> bool:
        return self in (RegimeLabel.A5p, RegimeLabel.A6p)


_GREATER = frozenset({RegimeLabel.A1, RegimeLabel.A2, RegimeLabel.A3, RegimeLabel.A4, RegimeLabel.A5, RegimeLabel.A6})


def classify_regime(system: SystemParams, l: float, tol: float = INTEGRALITY_TOL) -> RegimeLabel:
    """Which of the nine parameter regimes (a, b, d1, d2, l) falls into.

    The regimes split by the ordering of A0 against r* (the largest Turing
    threshold): A1-A6 give A0 > r*, A5'/A6' give A0 = r*, A6'' gives A0 < r*.
    Equalities (a = a_+-, l sqrt(x) integral) use the absolute tolerance ``tol``.
    """
    A0, _ = _positive_A0(system)
    a, b, d1, d2 = system.a, system.b, system.d1, system.d2
    if l <= math.sqrt(d1 / A0):
        return RegimeLabel.A1
    if d2 <= d1:
        return RegimeLabel.A2
    th = regime_thresholds(b, d1, d2)
    if b > th.b_star or not th.has_a:
        return RegimeLabel.A3
    am, ap = th.a_minus, th.a_plus
    on_edge = abs(a - am) <= tol * max(1.0, abs(am)) or abs(a - ap) <= tol * max(1.0, abs(ap))
    if on_edge:
        x_hat = aux_points(system).x_hat
        if _near_int(l * math.sqrt(x_hat), tol) is not None:
            return RegimeLabel.A5p
        return RegimeLabel.A5
    if a < am or a > ap:
        return RegimeLabel.A4
    counts = mode_counts(system, l, tol)
    if counts.M1 is None:
        # a strictly inside (a_-, a_+) always yields x_+-; guard rounding at the edges
        return RegimeLabel.A4
    if counts.M1 > counts.M2:
        aux = aux_points(system)
        if (_near_int(l * math.sqrt(aux.x_minus), tol) is not None
                or _near_int(l * math.sqrt(aux.x_plus), tol) is not None):
            return RegimeLabel.A6p
        return RegimeLabel.A6
    return RegimeLabel.A6pp


def regime_report(system: SystemParams, l: float, tol: float = INTEGRALITY_TOL) -> dict:
    """Summary used by the ``analyze``/``codim2`` commands; optional keys omitted."""
    A0, _ = _positive_A0(system)
    aux = aux_points(system)
    th = regime_thresholds(system.b, system.d1, system.d2)
    counts = mode_counts(system, l, tol)
    rs, _ = r_star(system, l)
    report: dict = {
        "label": classify_regime(system, l, tol).value,
        "A0": A0,
        "r_star": rs,
        "x_hat": aux.x_hat,
        "x_bar": aux.x_bar,
    }
    if aux.x_minus is not None:
        report["x_minus"] = aux.x_minus
        report["x_plus"] = aux.x_plus
    report["b_star"] = th.b_star
    if th.has_a:
        report["a_minus"] = th.a_minus
        report["a_plus"] = th.a_plus
    report["N1"] = counts.N1
    report["N2"] = counts.N2
    if counts.M1 is not None:
        report["M1"] = counts.M1
        report["M2"] = counts.M2
    if counts.N2 >= 1:
        s1, _ = count_windows(system, l)
        sets = enumerate_codim2(system, s1)
        report["L_TT"] = sets.L_TT
        report["L_TH"] = sets.L_TH
        report["L_TTH"] = sets.L_TTH
    else:
        report["L_TT"] = report["L_TH"] = report["L_TTH"] = []
    return report
