import csv
import io

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import L_TRIPLE, N_SAMPLES, REF, TRIPLE, active_systems, lengths
from holling_tanner.bifurcation import (
    BifurcationPoint,
    Kind,
    StabilityNote,
    bifurcating_solution_stability,
    classify_point,
    diagram,
)
from holling_tanner.critical_sets import RegimeLabel
from holling_tanner.errors import NotABifurcation, RegimeError
from holling_tanner.kinetics import ModelParams, SystemParams, linear_coefficients
from holling_tanner.spectrum import hopf_curve, mode_cap, trace_det, turing_curve

U, P = StabilityNote.UNSTABLE, StabilityNote.POSSIBLY_STABLE
_KIND_OF = {(1, 0): Kind.HOPF, (0, 1): Kind.TURING, (1, 1): Kind.TURING_HOPF, (0, 2): Kind.TURING_TURING,
            (1, 2): Kind.HOPF_DOUBLE_TURING, (0, 3): Kind.TRIPLE_TURING}


def test_reference_turing_hopf_point():
    A0, _ = linear_coefficients(REF)
    point = classify_point(ModelParams.from_system(REF, A0, 1.593334), tol=1e-5)
    assert point.kind is Kind.TURING_HOPF
    assert point.label == "TuringHopf(0, 1)"
    assert (point.pairs, point.zeros) == (1, 1)


def test_triple_point_hopf_double_turing():
    A0, _ = linear_coefficients(TRIPLE)
    point = classify_point(ModelParams.from_system(TRIPLE, A0, L_TRIPLE), tol=1e-6)
    assert point.kind is Kind.HOPF_DOUBLE_TURING
    assert point.modes == (0, 1, 3)
    # r* > A0 here, so A0 is not on the stability boundary
    assert point.threshold == pytest.approx(1.084062, abs=1e-5)
    assert point.stability_note is U


def test_pure_hopf_and_turing():
    A0, _ = linear_coefficients(REF)
    hopf = classify_point(ModelParams.from_system(REF, A0, 1.0))
    assert hopf.kind is Kind.HOPF and hopf.modes == (0,)
    assert hopf.stability_note is P
    l = 2.4
    rt = turing_curve(REF, 1, l)
    turing = classify_point(ModelParams.from_system(REF, rt, l))
    assert turing.kind is Kind.TURING and turing.modes == (1,)


def test_not_a_bifurcation():
    with pytest.raises(NotABifurcation):
        classify_point(ModelParams.from_system(REF, 0.123, 2.0))


def test_inactive_kinetics():
    with pytest.raises(RegimeError):
        classify_point(ModelParams.from_system(SystemParams(0.1, 0.5, 1.0, 10.0), 0.2, 2.0))


def _bruteforce_structure(p: ModelParams, eps: float = 1e-8):
    """Count imaginary pairs and zero eigenvalues from numpy eigenvalues of each mode."""
    A0, B0 = linear_coefficients(p)
    pairs, zeros = [], []
    for n in range(mode_cap(p, p.l) + 5):
        k = n * n / (p.l * p.l)
        ev = np.linalg.eigvals(np.array([[A0 - p.d1 * k, B0], [p.r, -p.r - p.d2 * k]]))
        if np.all(np.abs(ev.real) < eps) and np.all(np.abs(ev.imag) > eps):
            pairs.append(n)
        elif np.any(np.abs(ev) < eps):
            zeros.append(n)
    return pairs, zeros


def _min_margin(p: ModelParams, exclude: int) -> float:
    """Smallest |r - curve| over curves other than the chosen one."""
    out = np.inf
    for n in range(mode_cap(p, p.l) + 1):
        if n != exclude:
            out = min(out, abs(p.r - hopf_curve(p, n, p.l)))
        if n > 0 and n != -exclude:
            out = min(out, abs(p.r - turing_curve(p, n, p.l)))
    return out


@settings(max_examples=N_SAMPLES)
@given(active_systems, lengths, st.integers(0, 6), st.booleans())
def test_eigenstructure_matches_bruteforce(s, l, n, on_hopf):
    """A point placed on one curve has exactly the eigenvalues the classifier reports."""
    if on_hopf:
        r, tag = hopf_curve(s, n, l), n
    else:
        assume(n >= 1)
        r, tag = turing_curve(s, n, l), -n
    assume(0.01 < r < 50)
    p = ModelParams.from_system(s, r, l)
    if on_hopf:
        assume(trace_det(s, r, l, n)[1] > 1e-6)
    assume(_min_margin(p, tag) > 1e-6)
    point = classify_point(p)
    pairs, zeros = _bruteforce_structure(p)
    assert (point.pairs, point.zeros) == (len(pairs), len(zeros))
    assert point.kind is _KIND_OF[(len(pairs), len(zeros))]
    assert point.modes == tuple(pairs + zeros)


@settings(max_examples=N_SAMPLES)
@given(active_systems, lengths, st.floats(0.01, 5.0))
def test_generic_points_are_not_bifurcations(s, l, r):
    p = ModelParams.from_system(s, r, l)
    assume(_min_margin(p, exclude=10**6) > 1e-6)
    with pytest.raises(NotABifurcation):
        classify_point(p)
    pairs, zeros = _bruteforce_structure(p, eps=1e-12)
    assert not pairs and not zeros


def _point(kind, modes, r=0.2, threshold=0.2):
    pairs = 1 if kind in (Kind.HOPF, Kind.TURING_HOPF, Kind.HOPF_DOUBLE_TURING) else 0
    return BifurcationPoint(r, 1.0, kind, modes, pairs, len(modes) - pairs, None, threshold)


_GREATER = [RegimeLabel.A1, RegimeLabel.A2, RegimeLabel.A3, RegimeLabel.A4, RegimeLabel.A5, RegimeLabel.A6]
_EQUAL = [RegimeLabel.A5p, RegimeLabel.A6p]
_LESS = [RegimeLabel.A6pp]

_TABLE = [
    (Kind.HOPF, (0,), _GREATER + _EQUAL, _LESS),
    (Kind.HOPF, (2,), [], _GREATER + _EQUAL + _LESS),
    (Kind.TURING, (1,), _LESS, _GREATER + _EQUAL),
    (Kind.TURING_TURING, (1, 3), _LESS, _GREATER + _EQUAL),
    (Kind.TURING_HOPF, (0, 1), _EQUAL, _GREATER + _LESS),
    (Kind.TURING_HOPF, (1, 2), [], _GREATER + _EQUAL + _LESS),
    (Kind.HOPF_DOUBLE_TURING, (0, 1, 3), _EQUAL, _GREATER + _LESS),
    (Kind.TRIPLE_TURING, (1, 2, 3), [], _GREATER + _EQUAL + _LESS),
]


@pytest.mark.parametrize("kind, modes, stable_in, unstable_in", _TABLE)
def test_stability_table(kind, modes, stable_in, unstable_in):
    point = _point(kind, modes)
    for regime in stable_in:
        assert bifurcating_solution_stability(point, regime) is P
    for regime in unstable_in:
        assert bifurcating_solution_stability(point, regime) is U


@pytest.mark.parametrize("kind, modes", [(Kind.TURING, (1,)), (Kind.TURING_HOPF, (0, 1))])
def test_off_boundary_is_unstable(kind, modes):
    regime = RegimeLabel.A6pp if kind is Kind.TURING else RegimeLabel.A6p
    assert bifurcating_solution_stability(_point(kind, modes), regime) is P
    assert bifurcating_solution_stability(_point(kind, modes, r=0.2, threshold=0.3), regime) is U


def test_diagram_reference():
    sample = diagram(REF, (0.0, 0.5), (0.5, 4.0), 200)
    found = {(p.kind, p.modes): p for p in sample.intersections}
    assert found[("TH", (0, 1))].l == pytest.approx(1.593334, abs=1e-5)
    assert found[("TH", (0, 2))].l == pytest.approx(3.186669, abs=1e-5)
    for p in sample.intersections:
        assert p.kind in ("TH", "TT")
        assert 0.0 <= p.r <= 0.5
        i, j = p.modes
        other = hopf_curve(REF, i, p.l) if p.kind == "TH" else turing_curve(REF, i, p.l)
        assert other == pytest.approx(turing_curve(REF, j, p.l), abs=1e-8)


def test_diagram_curve_samples():
    sample = diagram(REF, (0.0, 0.5), (0.5, 4.0), 120)
    assert sample.curves
    ls = sorted({c.l for c in sample.curves})
    assert any(abs(l - 1.593334) < 1e-5 for l in ls)
    for c in sample.curves:
        assert 0.0 <= c.r <= 0.5 and 0.5 <= c.l <= 4.0
        if c.curve == "H":
            assert c.r == hopf_curve(REF, c.n, c.l)
            assert trace_det(REF, c.r, c.l, c.n)[1] > 0
        else:
            assert c.n >= 1
            assert c.r == turing_curve(REF, c.n, c.l)


def test_diagram_triple_point_coincidence():
    sample = diagram(TRIPLE, (0.0, 1.5), (2.5, 4.0), 200)
    near = {(p.kind, p.modes) for p in sample.intersections if abs(p.l - L_TRIPLE) < 1e-5}
    assert near == {("TH", (0, 1)), ("TH", (0, 3)), ("TT", (1, 3))}


def test_diagram_csv_and_json():
    sample = diagram(REF, (0.0, 0.5), (1.0, 2.0), 20)
    rows = list(csv.reader(io.StringIO(sample.to_csv())))
    assert rows[0] == ["curve", "n", "l", "r"]
    assert len(rows) == 1 + len(sample.curves)
    for row, c in zip(rows[1:], sample.curves):
        assert float(row[2]) == c.l and float(row[3]) == c.r
    js = sample.intersections_json()
    assert all(set(d) == {"kind", "modes", "r", "l"} for d in js)


def test_diagram_empty_cases():
    assert diagram(SystemParams(0.1, 0.5, 1.0, 10.0), (0.0, 1.0), (0.5, 4.0), 10).curves == []
    # below the first Turing length no Turing curve is positive and no intersection exists
    small = diagram(REF, (0.0, 0.5), (0.2, 1.0), 50)
    assert small.intersections == []
    assert all(c.curve == "H" for c in small.curves)
    with pytest.raises(ValueError):
        diagram(REF, (0.0, 0.5), (0.2, 1.0), 1)
    with pytest.raises(ValueError):
        diagram(REF, (0.5, 0.1), (0.2, 1.0), 10)

