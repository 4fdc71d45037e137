"""Bifurcation points in the (r, l) plane and the sampled bifurcation diagram.

A point (r, l) is a bifurcation point when r sits on at least one Hopf curve
r_n^H(l) carrying a genuine imaginary pair (D_n > 0 there) or on a Turing
curve r_n^T(l), n >= 1.  The kind follows from how many of each coincide.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._format import fmt
from .critical_sets import Codim2Point, RegimeLabel, classify_regime, enumerate_codim2
from .errors import DenominatorZero, NotABifurcation, NumericalError, RegimeError, WindowEmpty
from .kinetics import ModelParams, SystemParams, linear_coefficients
from .spectrum import hopf_curve, mode_cap, r_star, trace_det, turing_curve

__all__ = [
    "Kind",
    "StabilityNote",
    "BifurcationPoint",
    "CurvePoint",
    "DiagramSample",
    "classify_point",
    "bifurcating_solution_stability",
    "diagram",
]


class Kind(str, enum.Enum):
    HOPF = "Hopf"
    TURING = "Turing"
    TURING_HOPF = "TuringHopf"
    TURING_TURING = "TuringTuring"
    HOPF_DOUBLE_TURING = "HopfDoubleTuring"
    TRIPLE_TURING = "TripleTuring"


class StabilityNote(str, enum.Enum):
    POSSIBLY_STABLE = "PossiblyStable"
    UNSTABLE = "Unstable"


# (imaginary pairs, zero eigenvalues) -> kind
_KINDS = {
    (1, 0): Kind.HOPF,
    (0, 1): Kind.TURING,
    (1, 1): Kind.TURING_HOPF,
    (0, 2): Kind.TURING_TURING,
    (1, 2): Kind.HOPF_DOUBLE_TURING,
    (0, 3): Kind.TRIPLE_TURING,
}


@dataclass(frozen=True)
class BifurcationPoint:
    """A classified point; ``modes`` lists the Hopf mode (if any) then Turing modes."""

    r: float
    l: float
    kind: Kind
    modes: tuple[int, ...]
    pairs: int
    zeros: int
    stability_note: StabilityNote | None = None
    threshold: float | None = None

    @property
    def label(self) -> str:
        return f"{self.kind.value}({', '.join(map(str, self.modes))})"


def classify_point(params: ModelParams, tol: float = 1e-9) -> BifurcationPoint:
    """Decide which critical equalities hold at (r, l) within ``tol``.

    Raises NotABifurcation when none does.
    """
    A0, _ = linear_coefficients(params)
    if A0 <= 0:
        raise RegimeError(f"A0 = {A0:.6g} <= 0: no bifurcations occur")
    r, l = params.r, params.l
    hopf, turing = [], []
    for n in range(mode_cap(params, l) + 1):
        if abs(r - hopf_curve(params, n, l)) <= tol:
            _, D = trace_det(params, r, l, n)
            if D > 0:
                hopf.append(n)
        if n > 0:
            try:
                if abs(r - turing_curve(params, n, l)) <= tol:
                    turing.append(n)
            except DenominatorZero:
                pass
    kind = _KINDS.get((len(hopf), len(turing)))
    if kind is None:
        if not hopf and not turing:
            raise NotABifurcation(f"(r, l) = ({r}, {l}) lies on no Hopf or Turing curve")
        raise NotABifurcation(f"unsupported eigenstructure: Hopf modes {hopf}, Turing modes {turing}")
    threshold = max(A0, r_star(params, l)[0])
    point = BifurcationPoint(r, l, kind, tuple(hopf + turing), len(hopf), len(turing), None, threshold)
    note = bifurcating_solution_stability(point, classify_regime(params.system, l, tol), tol)
    return BifurcationPoint(r, l, kind, point.modes, point.pairs, point.zeros, note, threshold)


_A0_EQUAL = {RegimeLabel.A5p, RegimeLabel.A6p}


def bifurcating_solution_stability(
    point: BifurcationPoint, regime: RegimeLabel, tol: float = 1e-9
) -> StabilityNote:
    """Necessary conditions for the bifurcating solutions to be stable.

    A bifurcating branch can only be stable if (u0, v0) is not already
    unstable through another mode, i.e. the point lies on the stability
    boundary r = max{A0, r*}.  Per kind this gives:

    - Hopf(0): possible unless r* > A0 (regime A6''); Hopf(n >= 1): never.
    - Turing, TuringTuring: only when r* > A0 (A6'') and r = r*.
    - TuringHopf, HopfDoubleTuring: only when A0 = r* (A5', A6') and r = A0,
      with the Hopf mode equal to 0.
    - TripleTuring: never.

    When ``point.threshold`` is unknown the r = threshold check is skipped.
    """
    U, P = StabilityNote.UNSTABLE, StabilityNote.POSSIBLY_STABLE
    on_boundary = point.threshold is None or abs(point.r - point.threshold) <= tol
    hopf_mode = point.modes[0] if point.pairs else None
    if point.kind is Kind.TRIPLE_TURING:
        return U
    if hopf_mode is not None and hopf_mode != 0:
        return U
    if point.kind is Kind.HOPF:
        return U if regime is RegimeLabel.A6pp else P
    if point.kind in (Kind.TURING, Kind.TURING_TURING):
        return P if regime is RegimeLabel.A6pp and on_boundary else U
    return P if regime in _A0_EQUAL and on_boundary else U


@dataclass(frozen=True)
class CurvePoint:
    curve: str  # "H" or "T"
    n: int
    l: float
    r: float


@dataclass
class DiagramSample:
    curves: list[CurvePoint] = field(default_factory=list)
    intersections: list[Codim2Point] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("curve,n,l,r\n")
        for p in self.curves:
            buf.write(f"{p.curve},{p.n},{fmt(p.l)},{fmt(p.r)}\n")
        return buf.getvalue()

    def intersections_json(self) -> list[dict]:
        return [{"kind": p.kind, "modes": list(p.modes), "r": p.r, "l": p.l} for p in self.intersections]


def _refined_grid(lo: float, hi: float, resolution: int, marks: list[float]) -> np.ndarray:
    grid = np.linspace(lo, hi, resolution)
    h = (hi - lo) / (resolution - 1)
    extra = [np.linspace(max(lo, m - 2 * h), min(hi, m + 2 * h), 33) for m in marks]
    return np.unique(np.concatenate([grid, *extra, np.array(marks)]))


def diagram(
    system: SystemParams,
    r_range: tuple[float, float],
    l_range: tuple[float, float],
    resolution: int,
) -> DiagramSample:
    """Sample every Hopf/Turing curve entering the window plus their intersections.

    The l grid is uniform with extra samples within two cells of each
    intersection.  Hopf samples are kept only where the pair is genuinely
    imaginary (D_n > 0 on the curve, equivalently r_n^H > r_n^T).
    """
    r_lo, r_hi = r_range
    l_lo, l_hi = l_range
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if not (0 <= r_lo < r_hi and 0 < l_lo < l_hi):
        raise ValueError("ranges must be positive and increasing")
    A0, _ = linear_coefficients(system)
    if A0 <= 0:
        return DiagramSample()

    points: list[Codim2Point] = []
    try:
        sets = enumerate_codim2(system, (l_lo * (1 - 1e-12), l_hi))
        points = [p for p in sets.points if p.kind in ("TH", "TT") and r_lo <= p.r <= r_hi]
    except WindowEmpty:
        pass
    for p in points:
        i, j = p.modes
        other = hopf_curve(system, i, p.l) if p.kind == "TH" else turing_curve(system, i, p.l)
        if abs(other - turing_curve(system, j, p.l)) > 1e-8:
            raise NumericalError(f"intersection {p} failed re-verification")

    ls = _refined_grid(l_lo, l_hi, resolution, [p.l for p in points])
    curves: list[CurvePoint] = []
    n_max = mode_cap(system, l_hi)
    for n in range(n_max + 1):
        for l in ls:
            rh = hopf_curve(system, n, l)
            if r_lo <= rh <= r_hi and rh > 0 and trace_det(system, rh, l, n)[1] > 0:
                curves.append(CurvePoint("H", n, float(l), rh))
        if n == 0:
            continue
        for l in ls:
            try:
                rt = turing_curve(system, n, l)
            except DenominatorZero:
                continue
            if r_lo <= rt <= r_hi and rt > 0 and math.isfinite(rt):
                curves.append(CurvePoint("T", n, float(l), rt))
    return DiagramSample(curves, points)
