import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import dct, idct
from scipy.integrate import solve_ivp

from conftest import N_SAMPLES, REF, TRIPLE
from holling_tanner.errors import Degenerate, NearResonance, NoTuringHopf
from holling_tanner.kinetics import SystemParams, equilibrium, linear_coefficients
from holling_tanner.normal_form import (
    Attractor,
    NormalFormCoefficients,
    PlanarSystem,
    Region,
    _solve,
    bifurcation_lines,
    classify_region,
    locate_turing_hopf,
    normal_form_coefficients,
    planar_equilibria,
    planar_flow,
    planar_reduction,
    predict_attractors,
)


@pytest.fixture(scope="module")
def point():
    return locate_turing_hopf(REF, (1.0, 2.0))


@pytest.fixture(scope="module")
def coeffs(point):
    return normal_form_coefficients(point)


@pytest.fixture(scope="module")
def planar(coeffs):
    return planar_reduction(coeffs)


@pytest.fixture(scope="module")
def lines(planar):
    return bifurcation_lines(planar)


def _rel(x, y):
    return abs(x - y) / abs(y)


def test_locate_reference(point):
    assert point.r_star == pytest.approx(0.170468, abs=1e-4)
    assert point.l_star == pytest.approx(1.593334, abs=1e-4)
    assert (point.hopf_mode, point.turing_mode) == (0, 1)
    assert point.omega0 == pytest.approx(0.267646, abs=1e-4)


def test_locate_triple_point_picks_lowest_turing_mode():
    pt = locate_turing_hopf(TRIPLE, (2.9, 3.1))
    assert (pt.hopf_mode, pt.turing_mode) == (0, 1)
    assert pt.l_star == pytest.approx(3.022593, abs=1e-5)
    assert pt.r_star == pytest.approx(0.501219, abs=1e-5)


def test_no_turing_hopf():
    with pytest.raises(NoTuringHopf):
        locate_turing_hopf(SystemParams(0.6018, 0.0077, 5.0, 2.0), (0.5, 10.0))
    with pytest.raises(NoTuringHopf):
        locate_turing_hopf(REF, (0.2, 1.0))
    with pytest.raises(NoTuringHopf):
        locate_turing_hopf(SystemParams(0.1, 0.5, 1.0, 10.0), (0.5, 10.0))


EXPECTED = {
    "f_a1z1": -1.0000 + 1.5701j,
    "f_a1z2": -0.1484,
    "f_a2z2": 0.3645,
    "g210": -0.3026 - 4.8696j,
    "g102": 1.3640 - 10.1736j,
    "g111": -1.3543,
    "g003": 0.1241,
}


def test_coefficient_values(coeffs):
    d = coeffs.to_dict()
    assert d["f_a2z1"] == 0
    for name, value in EXPECTED.items():
        got = complex(d[name])
        for part in ("real", "imag"):
            want = getattr(value, part) if isinstance(value, complex) else (value if part == "real" else 0.0)
            if want:
                assert _rel(getattr(got, part), want) < 5e-3, name
            else:
                assert getattr(got, part) == 0.0, name


def test_conjugate_row(coeffs):
    row = coeffs.conjugate_row()
    assert row == (coeffs.f_a1z1.conjugate(), coeffs.f_a2z1.conjugate(), coeffs.g210.conjugate(),
                   coeffs.g102.conjugate())


def test_hopf_branch_oracle(point, coeffs):
    """Homogeneous limit-cycle amplitude of the kinetics ODE against the normal form."""
    u0 = equilibrium(REF).u0
    errors = []
    for alpha in (-1e-3, -5e-4):
        r = point.r_star + alpha
        rho2 = -3.0 * coeffs.f_a1z1.real * alpha / coeffs.g210.real
        predicted = 2.0 * math.sqrt(rho2) / math.sqrt(math.pi)

        def rhs(t, y, r=r):
            u, v = y
            return [u * (1 - u) - REF.a * u * v / (u + REF.b), r * v * (1 - v / u)]

        sol = solve_ivp(rhs, (0.0, 8000.0), [u0 + predicted, u0], rtol=1e-10, atol=1e-12, dense_output=True)
        u = sol.sol(np.linspace(7000.0, 8000.0, 100001))[0]
        errors.append(abs((u.max() - u.min()) / 2 / predicted - 1.0))
    assert errors[0] < 1e-2
    # the truncation error is first order in alpha
    assert errors[1] < 0.7 * errors[0]


def _turing_branch_alpha(point, amplitude, M=64, scale=1e-2):
    """Solve the DCT Galerkin steady-state problem with the mode-n* amplitude pinned; return alpha1."""
    s = point.system
    u0 = equilibrium(s).u0
    A0, B0 = linear_coefficients(s)
    l, n = point.l_star, point.turing_mode
    k2 = (np.arange(M) / l) ** 2

    def F(X):
        Hu = X[:M].copy()
        r = point.r_star + scale * X[n]
        Hu[n] = amplitude * (M - 1)
        Hv = X[M:]
        u, v = idct(Hu, type=1), idct(Hv, type=1)
        fu = u * (1 - u) - s.a * u * v / (u + s.b)
        fv = r * v * (1 - v / u)
        return np.concatenate([dct(fu, type=1) - s.d1 * k2 * Hu, dct(fv, type=1) - s.d2 * k2 * Hv]) / (M - 1)

    x = l * np.pi * np.arange(M) / (M - 1)
    p1 = (s.d1 * n * n / l / l - A0) / B0
    X = np.concatenate([dct(u0 + amplitude * np.cos(n * x / l), type=1),
                        dct(u0 + amplitude * p1 * np.cos(n * x / l), type=1)])
    X[n] = 0.0
    h = 1e-7
    for _ in range(30):
        f = F(X)
        J = np.empty((2 * M, 2 * M))
        for j in range(2 * M):
            e = np.zeros(2 * M)
            e[j] = h
            J[:, j] = (F(X + e) - F(X - e)) / (2 * h)
        step = np.linalg.solve(J, -f)
        X = X + step
        if np.abs(step).max() < 1e-13:
            break
    assert np.abs(F(X)).max() < 1e-12
    return scale * X[n]


def test_turing_branch_oracle(point, coeffs):
    """Steady cosine pattern of the discretized PDE against the normal form branch."""
    errors = []
    for amp in (0.005, 0.0025):
        predicted = -coeffs.g003 * amp * amp * math.pi / (2 * 3 * coeffs.f_a1z2)
        errors.append(abs(_turing_branch_alpha(point, amp) / predicted - 1.0))
    assert errors[0] < 2e-2
    # the truncation error is second order in the amplitude
    assert errors[1] < 0.4 * errors[0]


def test_planar_values(planar):
    assert planar.a0 == 1.0
    assert _rel(planar.b0, -10.9918) < 5e-3
    assert _rel(planar.c0, 4.4751) < 5e-3
    assert planar.d0 == -1.0
    assert planar.eps1[0] == pytest.approx(0.5, rel=5e-3)
    assert planar.eps1[1] == 0.0
    assert planar.eps2[0] == pytest.approx(0.0742, abs=1e-3)
    assert planar.eps2[1] == pytest.approx(-0.1822, abs=1e-3)


def test_line_slopes(lines):
    expected = {"L2": 0.4072, "L3": -11.8738, "L5": 1.3614, "L6": 0.4072, "L7": 0.1575}
    for name, slope in expected.items():
        ray = getattr(lines, name)
        assert _rel(ray.slope, slope) < 5e-3, name
    assert (lines.L2.alpha1_sign, lines.L3.alpha1_sign, lines.L6.alpha1_sign, lines.L7.alpha1_sign) == (-1, -1, 1, 1)
    assert lines.L1.alpha1_sign == 0 and lines.L1.direction[1] < 0
    assert lines.L4.alpha1_sign == 0 and lines.L4.direction[1] > 0
    assert 0 < lines.L7.slope < lines.L6.slope


@pytest.mark.parametrize(
    "alpha, region",
    [
        ((0.0373, -0.0543), Region.D1),
        ((-0.0344, -0.0578), Region.D2),
        ((-0.0325, 0.0356), Region.D3),
        ((-0.0030, 0.0888), Region.D4),
        ((0.0352, 0.0817), Region.D5),
        ((0.0405, 0.0449), Region.D6),
        ((0.0220, 0.0082), Region.D7),
    ],
)
def test_region_examples(planar, lines, alpha, region):
    assert classify_region(planar, *alpha, lines=lines) is region


def test_region_boundary_and_origin(planar, lines):
    c, s = lines.L3.direction
    assert classify_region(planar, 0.01 * c, 0.01 * s, lines=lines) is Region.ON_BOUNDARY
    with pytest.raises(ValueError):
        classify_region(planar, 0.0, 0.0, lines=lines)


def test_d6_has_repelling_e4(planar):
    E4 = planar_equilibria(planar, 0.0405, 0.0449).E4
    assert E4.exists
    ev = E4.eigenvalues
    assert np.all(ev.real > 0) and np.all(np.abs(ev.imag) > 0)


def test_predictions(planar, lines):
    d1 = predict_attractors(planar, Region.D1, lines)
    assert d1.stable == {Attractor.CONSTANT_STEADY}
    assert any(o.kind is Attractor.NONCONSTANT_STEADY and o.count == 2 and not o.stable for o in d1.objects)
    d4 = predict_attractors(planar, Region.D4, lines)
    assert any(o.kind is Attractor.INHOMOGENEOUS_PERIODIC and o.count == 2 and o.stable for o in d4.objects)
    assert any(o.kind is Attractor.HOMOGENEOUS_PERIODIC and not o.stable for o in d4.objects)
    d6 = predict_attractors(planar, Region.D6, lines)
    assert Attractor.INHOMOGENEOUS_QUASI_PERIODIC in d6.stable
    d7 = predict_attractors(planar, Region.D7, lines)
    assert {Attractor.CONSTANT_STEADY, Attractor.INHOMOGENEOUS_QUASI_PERIODIC} <= d7.stable
    with pytest.raises(ValueError):
        predict_attractors(planar, Region.ON_BOUNDARY, lines)


def _coeffs(g210, g102, g111, g003, f1=-1 + 1.5j, f2=0j, f3=-0.15, f4=0.36):
    return NormalFormCoefficients(f1, f2, f3, f4, g210, g102, g111, g003)


def test_decoupled_case():
    planar = planar_reduction(_coeffs(-6 + 0j, 0j, 0.0, 6.0))
    assert (planar.a0, planar.b0, planar.c0, planar.d0) == (1.0, 0.0, 0.0, -1.0)


def test_degenerate_cases():
    with pytest.raises(Degenerate):
        planar_reduction(_coeffs(0.0 + 2j, 1 + 0j, 1.0, 1.0))
    with pytest.raises(Degenerate):
        planar_reduction(_coeffs(-1 + 0j, 1 + 0j, 1.0, 0.0))
    with pytest.raises(Degenerate):
        bifurcation_lines(PlanarSystem((0.5, 0.0), (0.1, -0.2), 1.0, 1.0, 1.0, 1.0))


def test_near_resonance():
    with pytest.raises(NearResonance):
        _solve(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]]), np.ones(2), "test")
    assert np.allclose(_solve(np.eye(2), np.ones(2), "test"), 1.0)


def test_planar_flow_examples():
    planar = PlanarSystem((1.0, 0.0), (0.0, 1.0), 1.0, 3.7, -2.0, -1.0)
    assert planar_flow(planar, (0.3, -0.2), (0.0, 0.0)) == (0.0, 0.0)
    assert planar_flow(planar, (-1.0, 0.0), (1.0, 0.0))[0] == 0.0
    with pytest.raises(ValueError):
        planar_flow(planar, (0.1, 0.1), (-0.1, 0.0))


def test_only_origin_at_organizing_center(planar):
    eqs = planar_equilibria(planar, 0.0, 0.0)
    assert eqs.E1.exists and not (eqs.E2.exists or eqs.E3.exists or eqs.E4.exists)


_nonzero = st.floats(0.05, 20.0)
_signed = st.floats(-20.0, 20.0)
random_coeffs = st.builds(
    lambda g210r, g210i, g102r, g102i, g111, g003, sr, sg, f1, f2, f3, f4: _coeffs(
        complex(sr * g210r, g210i), complex(g102r, g102i), g111, sg * g003, complex(f1, 1.0), complex(f2, 0.0), f3, f4
    ),
    _nonzero, _signed, _signed, _signed, _signed, _nonzero,
    st.sampled_from([-1.0, 1.0]), st.sampled_from([-1.0, 1.0]),
    _signed, _signed, _signed, _signed,
)


@settings(max_examples=N_SAMPLES)
@given(random_coeffs, st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_rescaling_reproduces_planar_flow(c, R, V, a1, a2):
    """Cylindrical truncation under rho = sqrt(6/|Re g210|) R, z2 = sqrt(6/|g003|) V equals the planar flow."""
    planar = planar_reduction(c)
    sr, sv = math.sqrt(6 / abs(c.g210.real)), math.sqrt(6 / abs(c.g003))
    rho, z2 = sr * R, sv * V
    drho = 0.5 * (c.f_a1z1.real * a1 + c.f_a2z1.real * a2) * rho + (c.g210.real * rho ** 3 + c.g102.real * rho * z2 ** 2) / 6
    dz2 = 0.5 * (c.f_a1z2 * a1 + c.f_a2z2 * a2) * z2 + (c.g111 * rho ** 2 * z2 + c.g003 * z2 ** 3) / 6
    dR, dV = planar_flow(planar, (a1, a2), (R, V))
    scale = 1.0 + abs(c.g102.real) + abs(c.g111) + abs(c.f_a1z1.real) + abs(c.f_a2z2)
    assert dR == pytest.approx(drho / sr, abs=1e-11 * scale * 30)
    assert dV == pytest.approx(dz2 / sv, abs=1e-11 * scale * 30)


@settings(max_examples=N_SAMPLES)
@given(random_coeffs, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_equilibria_satisfy_planar_equations(c, a1, a2):
    planar = planar_reduction(c)
    e1, e2 = planar.epsilons(a1, a2)
    eqs = planar_equilibria(planar, a1, a2)
    assert sorted(eqs.E1.eigenvalues.real) == pytest.approx(sorted([-e1, -e2]), abs=1e-15)
    for eq in eqs:
        if eq.exists:
            dr, dv = planar_flow(planar, (a1, a2), (eq.rho, eq.v))
            assert abs(dr) <= 1e-12 * max(1.0, eq.rho ** 3 * 30)
            assert abs(dv) <= 1e-12 * max(1.0, eq.v ** 3 * 30)
    if eqs.E4.exists:
        a0, b0, c0, d0 = planar.a0, planar.b0, planar.c0, planar.d0
        rho2, v2 = eqs.E4.rho ** 2, eqs.E4.v ** 2
        scale = max(1.0, abs(e1), abs(e2), (abs(b0) + abs(c0) + 1) * (rho2 + v2))
        assert abs(e1 + a0 * rho2 + b0 * v2) <= 1e-12 * scale
        assert abs(e2 + c0 * rho2 + d0 * v2) <= 1e-12 * scale
        assert eqs.E4.rho > 0 and eqs.E4.v > 0


@settings(max_examples=N_SAMPLES)
@given(st.floats(-math.pi, math.pi), st.floats(1e-4, 1.0), st.floats(1e-3, 1e3))
def test_region_is_scale_invariant(planar, lines, theta, radius, factor):
    a1, a2 = radius * math.cos(theta), radius * math.sin(theta)
    base = classify_region(planar, a1, a2, lines=lines)
    assert classify_region(planar, factor * a1, factor * a2, lines=lines) is base


@settings(max_examples=N_SAMPLES)
@given(random_coeffs)
def test_l2_l6_share_slope(c):
    planar = planar_reduction(c)
    try:
        # the L5 scan resolution is irrelevant here
        lines = bifurcation_lines(planar, samples=360)
    except Degenerate:
        return
    assert abs(math.sin(lines.L2.angle - lines.L6.angle)) < 1e-12
    assert math.cos(lines.L2.angle - lines.L6.angle) < 0
    e = planar.epsilons(*lines.L2.direction)
    assert abs(e[1]) < 1e-12 * (1 + abs(e[0]))


@settings(max_examples=N_SAMPLES)
@given(st.floats(1e-6, 1e-2), st.floats(1e-3, 1.0))
def test_line_crossings(planar, lines, delta, radius):
    """Crossing L3 toggles E4, crossing L5 flips trace J(E4), L1/L4 and L2/L6 flip E1's eigenvalues."""

    def at(ray, offset):
        t = ray.angle + offset
        return planar_equilibria(planar, radius * math.cos(t), radius * math.sin(t))

    assert at(lines.L3, -delta).E4.exists != at(lines.L3, delta).E4.exists
    lo, hi = at(lines.L5, -delta).E4, at(lines.L5, delta).E4
    assert lo.exists and hi.exists
    assert np.sign(np.trace(lo.jacobian)) == -np.sign(np.trace(hi.jacobian))
    for ray, idx in ((lines.L1, 0), (lines.L4, 0), (lines.L2, 1), (lines.L6, 1)):
        t_lo, t_hi = ray.angle - delta, ray.angle + delta
        e_lo = planar.epsilons(math.cos(t_lo), math.sin(t_lo))[idx]
        e_hi = planar.epsilons(math.cos(t_hi), math.sin(t_hi))[idx]
        assert np.sign(e_lo) == -np.sign(e_hi)
