"""Pseudo-spectral simulation of the reaction-diffusion system and attractor classification.

Space: M collocation points x_j = l pi j / (M - 1) and the type-I discrete
cosine transform, which carries exactly the Neumann modes cos(n x / l),
n = 0..M-1.  Time: second-order integrating-factor Runge-Kutta (Heun).
Diffusion is integrated exactly per mode through E_n = exp(-d (n/l)^2 dt),
the kinetics explicitly:

    H*      = E (H + dt N(H))
    H(t+dt) = E (H + dt/2 N(H)) + dt/2 N(H*)

Several runs sharing M and dt can be advanced together (``simulate_batch``);
each run keeps its own parameters and domain length.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.fft import dct, idct

from ._format import dumps, fmt
from .errors import Blowup, InsufficientData, NumericalError, Singularity, ValidationError
from .kinetics import ModelParams, equilibrium
from .normal_form import Attractor

__all__ = [
    "AttractorClass",
    "Grid",
    "Term",
    "ICSpec",
    "Field",
    "SimConfig",
    "Trajectory",
    "Tolerances",
    "Diagnosis",
    "initial_condition",
    "simulate",
    "simulate_batch",
    "classify_attractor",
    "diagnose",
    "probe_series",
    "snapshots_csv",
    "probes_csv",
    "modes_csv",
    "write_outputs",
    "manifest",
    "load_trajectory",
]

AttractorClass = Attractor

BLOWUP = 1e3
U_FLOOR = 1e-10


@dataclass(frozen=True)
class Grid:
    l: float
    M: int = 128

    def __post_init__(self) -> None:
        if int(self.M) != self.M or self.M < 64:
            raise ValidationError(f"M must be an integer >= 64, got {self.M!r}")
        if not (self.l > 0 and math.isfinite(self.l)):
            raise ValidationError(f"l must be positive, got {self.l!r}")

    @property
    def length(self) -> float:
        return self.l * math.pi

    @property
    def x(self) -> np.ndarray:
        return self.length * np.arange(self.M) / (self.M - 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        """k_n = n / l, so that mode n is cos(k_n x)."""
        return np.arange(self.M) / self.l


@dataclass(frozen=True)
class Term:
    """amplitude * shape(k x) with shape in {"sin", "cos"}."""

    amplitude: float
    k: float
    shape: str = "sin"

    def __post_init__(self) -> None:
        if self.shape not in ("sin", "cos"):
            raise ValidationError(f"shape must be 'sin' or 'cos', got {self.shape!r}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        f = np.sin if self.shape == "sin" else np.cos
        return self.amplitude * f(self.k * x)


@dataclass(frozen=True)
class ICSpec:
    """Base values (None means the coexistence equilibrium) plus perturbation terms."""

    u_terms: tuple[Term, ...] = ()
    v_terms: tuple[Term, ...] = ()
    u_base: float | None = None
    v_base: float | None = None

    @classmethod
    def from_dict(cls, data: dict) -> ICSpec:
        allowed = {"u_terms", "v_terms", "u_base", "v_base"}
        unknown = set(data) - allowed
        if unknown:
            raise ValidationError(f"unknown initial-condition keys: {sorted(unknown)}")

        def terms(items):
            out = []
            for item in items or ():
                extra = set(item) - {"amplitude", "k", "shape"}
                if extra:
                    raise ValidationError(f"unknown term keys: {sorted(extra)}")
                out.append(Term(float(item["amplitude"]), float(item["k"]), item.get("shape", "sin")))
            return tuple(out)

        return cls(terms(data.get("u_terms")), terms(data.get("v_terms")), data.get("u_base"), data.get("v_base"))

    def to_dict(self) -> dict:
        return {
            "u_terms": [asdict(t) for t in self.u_terms],
            "v_terms": [asdict(t) for t in self.v_terms],
            "u_base": self.u_base,
            "v_base": self.v_base,
        }


@dataclass(frozen=True)
class Field:
    u: np.ndarray
    v: np.ndarray


def initial_condition(grid: Grid, ic: ICSpec, params: ModelParams | None = None) -> Field:
    """Evaluate base + sum of terms on the grid; u must stay positive."""
    if ic.u_base is None or ic.v_base is None:
        if params is None:
            raise ValidationError("equilibrium base values need the model parameters")
        eq = equilibrium(params)
    ub = eq.u0 if ic.u_base is None else float(ic.u_base)
    vb = eq.v0 if ic.v_base is None else float(ic.v_base)
    x = grid.x
    u = np.full(grid.M, ub) + sum((t(x) for t in ic.u_terms), np.zeros(grid.M))
    v = np.full(grid.M, vb) + sum((t(x) for t in ic.v_terms), np.zeros(grid.M))
    if np.any(u <= 0):
        raise ValidationError("initial prey density must be strictly positive")
    if np.any(v < 0):
        raise ValidationError("initial predator density must be non-negative")
    return Field(u, v)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 5000.0
    save_stride: float = 1.0
    ic: ICSpec = field(default_factory=ICSpec)
    probe_points: tuple[float, ...] = (0.0,)
    n_modes: int = 16

    def __post_init__(self) -> None:
        if not (self.dt > 0 and self.t_end > 0 and self.save_stride > 0):
            raise ValidationError("dt, t_end and save_stride must be positive")
        ratio = self.save_stride / self.dt
        if abs(ratio - round(ratio)) > 1e-6 * ratio or round(ratio) < 1:
            raise ValidationError("save_stride must be a positive integer multiple of dt")
        if self.n_modes < 1:
            raise ValidationError("n_modes must be >= 1")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def stride(self) -> int:
        return int(round(self.save_stride / self.dt))


@dataclass
class Trajectory:
    """Saved states: ``u``, ``v`` have shape (nt, M); ``modes`` has shape (nt, 2, K)."""

    params: ModelParams
    grid: Grid
    config: SimConfig
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    modes: np.ndarray

    def probes(self) -> dict[float, np.ndarray]:
        return {x: probe_series(self, x) for x in self.config.probe_points}


def _to_modes(H: np.ndarray, M: int, K: int) -> np.ndarray:
    """Cosine coefficients a_n with f(x) = sum_n a_n cos(n x / l)."""
    a = H[..., :K] / (M - 1)
    a[..., 0] *= 0.5
    if K >= M:
        a[..., M - 1] *= 0.5
    return a


def simulate_batch(
    cases: Sequence[tuple[ModelParams, Field]],
    M: int,
    config: SimConfig,
) -> list[Trajectory | NumericalError]:
    """Advance several runs in lockstep; a failing run yields its error in place."""
    grids = [Grid(p.l, M) for p, _ in cases]
    B = len(cases)
    if B == 0:
        return []
    col = lambda name: np.array([getattr(p, name) for p, _ in cases], dtype=float)[:, None]  # noqa: E731
    a, b, r = col("a"), col("b"), col("r")
    k2 = (np.arange(M)[None, :] / col("l")) ** 2
    E = np.exp(-np.stack([col("d1") * k2, col("d2") * k2], axis=1) * config.dt)
    dt = config.dt
    K = min(config.n_modes, M)

    U = np.stack([np.stack([f.u, f.v]) for _, f in cases]).astype(float)
    alive = np.ones(B, dtype=bool)
    errors: dict[int, NumericalError] = {}

    def rhs(U):
        u, v = U[:, 0], U[:, 1]
        return np.stack([u * (1.0 - u) - a * u * v / (u + b), r * v * (1.0 - v / u)], axis=1)

    def check(U, t):
        bad_u = ~(U[:, 0].min(axis=-1) > U_FLOOR)
        bad_big = ~(np.abs(U).max(axis=(1, 2)) < BLOWUP)
        for i in np.flatnonzero((bad_u | bad_big) & alive):
            if bad_big[i] and np.all(np.isfinite(U[i])):
                errors[i] = Blowup(f"|u| or |v| exceeded {BLOWUP:g} at t = {t:.6g}")
            else:
                errors[i] = Singularity(f"min u <= {U_FLOOR:g} at t = {t:.6g}")
            alive[i] = False
            U[i] = 1.0  # park the failed run on a harmless state

    check(U, 0.0)
    H = dct(U, type=1, axis=-1)
    nsave = config.steps // config.stride + 1
    t_out = np.empty(nsave)
    u_out = np.empty((nsave, B, M))
    v_out = np.empty((nsave, B, M))
    m_out = np.empty((nsave, B, 2, K))

    def save(k, t):
        t_out[k] = t
        u_out[k], v_out[k] = U[:, 0], U[:, 1]
        m_out[k] = _to_modes(H.copy(), M, K)

    save(0, 0.0)
    k = 1
    for step in range(1, config.steps + 1):
        # overflow in a diverging run is caught by the check below
        with np.errstate(all="ignore"):
            Nh = dct(rhs(U), type=1, axis=-1)
            Hs = E * (H + dt * Nh)
            Ns = dct(rhs(idct(Hs, type=1, axis=-1)), type=1, axis=-1)
            H = E * (H + 0.5 * dt * Nh) + 0.5 * dt * Ns
            U = idct(H, type=1, axis=-1)
        if not (U[:, 0].min() > U_FLOOR and np.abs(U).max() < BLOWUP):
            check(U, step * dt)
            H = dct(U, type=1, axis=-1)
            if not alive.any():
                break
        if step % config.stride == 0:
            save(k, step * dt)
            k += 1

    out: list[Trajectory | NumericalError] = []
    for i, (p, _) in enumerate(cases):
        if i in errors:
            out.append(errors[i])
        else:
            out.append(Trajectory(p, grids[i], config, t_out[:k].copy(), u_out[:k, i].copy(),
                                  v_out[:k, i].copy(), m_out[:k, i].copy()))
    return out


def simulate(
    params: ModelParams,
    grid: Grid,
    config: SimConfig,
    initial: Field | None = None,
) -> Trajectory:
    """Integrate one run; raises Blowup or Singularity on failure."""
    if abs(grid.l - params.l) > 1e-12 * params.l:
        raise ValidationError("grid and parameters disagree on l")
    if initial is None:
        initial = initial_condition(grid, config.ic, params)
    result = simulate_batch([(params, initial)], grid.M, config)[0]
    if isinstance(result, NumericalError):
        raise result
    return result


def probe_series(trajectory: Trajectory, x: float) -> np.ndarray:
    """(u, v) at position x for every saved time, shape (nt, 2), by linear interpolation."""
    xs = trajectory.grid.x
    if not (0.0 <= x <= xs[-1] * (1 + 1e-12)):
        raise ValidationError(f"probe x = {x} lies outside [0, {xs[-1]}]")
    x = min(x, xs[-1])
    j = min(int(x / (xs[1] - xs[0])), len(xs) - 2)
    w = (x - xs[j]) / (xs[j + 1] - xs[j])
    u = (1 - w) * trajectory.u[:, j] + w * trajectory.u[:, j + 1]
    v = (1 - w) * trajectory.v[:, j] + w * trajectory.v[:, j + 1]
    return np.stack([u, v], axis=1)


@dataclass(frozen=True)
class Tolerances:
    eps_t: float = 1e-6
    eps_x: float = 1e-6
    eps_m: float = 1e-4
    window: float = 0.4
    min_cycles: float = 8.0
    modulation: float = 2e-2
    persistence: float = 0.5
    peak_fraction: float = 0.1
    max_q: int = 10


@dataclass(frozen=True)
class Diagnosis:
    verdict: Attractor
    temporal_var: float
    spatial_var: float
    higher_mode_amp: float
    period: float | None = None
    modulation: float | None = None
    extrapolated_amp: float | None = None
    note: str = ""


def _aitken_limit(series: np.ndarray) -> tuple[float, str]:
    """Limit of a geometrically converging series from its three thirds."""
    n = len(series) // 3
    a0, a1, a2 = (float(np.mean(series[i * n:(i + 1) * n])) for i in range(3))
    d1, d2 = a1 - a0, a2 - a1
    if abs(d2) <= 1e-12 * max(1.0, abs(a2)):
        return a2, "settled"
    q = d2 / d1 if d1 != 0 else math.inf
    if 0 < q < 1:
        return a2 + d2 * q / (1 - q), "converging"
    if q >= 1:
        # growing, or decaying at an accelerating rate: no limit can be inferred
        return a2, "diverging"
    return a2, "settled"


def _dominant_frequency(series: np.ndarray, dt: float) -> tuple[float, np.ndarray, np.ndarray]:
    x = series - series.mean()
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    freqs = np.fft.rfftfreq(len(x), dt)
    k = int(np.argmax(spec[2:]) + 2)
    return float(freqs[k]), freqs, spec


def _off_harmonic_peak(freqs, spec, f0, tol) -> bool:
    """A major spectral peak that is not a multiple of f0 and not rationally related to it."""
    df = freqs[1] - freqs[0]
    top = spec[2:].max()
    peaks = [i for i in range(3, len(spec) - 1)
             if spec[i] >= tol.peak_fraction * top and spec[i] >= spec[i - 1] and spec[i] >= spec[i + 1]]
    for i in peaks:
        ratio = freqs[i] / f0
        rational = any(abs(ratio - p / q) * f0 <= 2 * df
                       for q in range(1, tol.max_q + 1) for p in [round(ratio * q)])
        if not rational:
            return True
    return False


def _cycle_modulation(series: np.ndarray, period: float) -> float:
    """Relative spread of the per-cycle maxima and minima.

    The series is cut into consecutive one-period segments; each extremum is
    taken over its segment widened by a fifth of a period on both sides and
    refined by a parabola through the three samples around it.  A periodic
    signal gives (nearly) identical extrema; amplitude modulation does not.
    """
    n = len(series)
    pad = max(1, int(round(0.2 * period)))
    starts = np.arange(0.0, n - period, period)
    if len(starts) < 3:
        return 0.0

    def refined(sign: float) -> np.ndarray:
        out = []
        for s0 in starts:
            lo, hi = max(0, int(s0) - pad), min(n, int(s0 + period) + pad + 1)
            seg = sign * series[lo:hi]
            i = int(np.argmax(seg))
            y = seg[i]
            if 0 < i < len(seg) - 1:
                ym, yp = seg[i - 1], seg[i + 1]
                den = ym - 2 * y + yp
                if den < 0:
                    y = y - 0.125 * (yp - ym) ** 2 / den
            out.append(sign * y)
        return np.array(out)

    peaks, troughs = refined(1.0), refined(-1.0)
    scale = max(float(peaks.max() - troughs.min()), 1e-300)
    return float(max(np.ptp(peaks), np.ptp(troughs)) / scale)


def diagnose(trajectory: Trajectory, tol: Tolerances = Tolerances()) -> Diagnosis:
    """Decision tree on the last ``tol.window`` fraction of the run.

    1. Temporal variance below eps_t (after removing a linear trend): steady.
       Spatial variance below eps_x gives ConstantSteady; otherwise the
       pattern amplitude is extrapolated (Aitken) and a pattern converging to
       zero also counts as ConstantSteady.
    2. Oscillating with all modes n >= 1 below eps_m: HomogeneousPeriodic.
    3. Oscillating with a pattern: InhomogeneousQuasiPeriodic when the
       dominant pattern mode shows a persistent modulation of its per-cycle
       extrema (in both halves of the window) or an incommensurate spectral
       peak; else InhomogeneousPeriodic.
    """
    t = trajectory.t
    n = len(t)
    start = int(math.floor(n * (1 - tol.window)))
    win = slice(start, n)
    if n - start < 32:
        raise InsufficientData(f"only {n - start} samples in the classification window")
    dt = float(t[1] - t[0])
    U = trajectory.u[win]
    modes = trajectory.modes[win, 0]
    tt = t[win] - t[win].mean()

    slope = (tt @ (U - U.mean(axis=0))) / (tt @ tt)
    resid = U - U.mean(axis=0) - np.outer(tt, slope)
    temporal = float(resid.var(axis=0).max())
    spatial = float(U.mean(axis=0).var())
    higher = float(np.abs(modes[:, 1:]).max()) if modes.shape[1] > 1 else 0.0

    if temporal < tol.eps_t:
        if spatial < tol.eps_x:
            return Diagnosis(Attractor.CONSTANT_STEADY, temporal, spatial, higher)
        limits = []
        for j in range(1, modes.shape[1]):
            lim, state = _aitken_limit(modes[:, j])
            if state == "diverging":
                return Diagnosis(Attractor.UNCLASSIFIED, temporal, spatial, higher,
                                 note=f"mode {j} still drifting (no geometric convergence)")
            limits.append(abs(lim))
        extrap = max(limits) if limits else 0.0
        if 0.5 * extrap * extrap < tol.eps_x:
            return Diagnosis(Attractor.CONSTANT_STEADY, temporal, spatial, higher,
                             extrapolated_amp=extrap, note="pattern decaying")
        return Diagnosis(Attractor.NONCONSTANT_STEADY, temporal, spatial, higher, extrapolated_amp=extrap)

    if higher < tol.eps_m:
        f0, _, _ = _dominant_frequency(modes[:, 0], dt)
        return Diagnosis(Attractor.HOMOGENEOUS_PERIODIC, temporal, spatial, higher, period=1.0 / f0)

    variances = modes.var(axis=0)
    lead = int(np.argmax(variances))
    f0, freqs, spec = _dominant_frequency(modes[:, lead], dt)
    period = 1.0 / f0
    P = int(round(period / dt))
    if (n - start) * dt < tol.min_cycles * period or P < 2:
        raise InsufficientData(f"window holds fewer than {tol.min_cycles:g} periods of {period:.4g}")

    pattern = 1 + int(np.argmax(np.abs(modes[:, 1:]).mean(axis=0)))
    series = modes[:, pattern]
    half = len(series) // 2
    m_first = _cycle_modulation(series[:half], period / dt)
    m_second = _cycle_modulation(series[half:], period / dt)
    mod = min(m_first, m_second)
    persistent = mod > tol.modulation and m_second >= tol.persistence * m_first
    incommensurate = _off_harmonic_peak(freqs, spec, f0, tol)
    if persistent or incommensurate:
        why = "persistent envelope modulation" if persistent else "incommensurate spectral peak"
        return Diagnosis(Attractor.INHOMOGENEOUS_QUASI_PERIODIC, temporal, spatial, higher, period, mod, note=why)
    return Diagnosis(Attractor.INHOMOGENEOUS_PERIODIC, temporal, spatial, higher, period, mod)


def classify_attractor(trajectory: Trajectory, tol: Tolerances = Tolerances()) -> Attractor:
    return diagnose(trajectory, tol).verdict


def snapshots_csv(trajectory: Trajectory) -> str:
    buf = io.StringIO()
    buf.write("t,x,u,v\n")
    xs = [fmt(x) for x in trajectory.grid.x]
    for k, t in enumerate(trajectory.t):
        ts = fmt(t)
        for j, x in enumerate(xs):
            buf.write(f"{ts},{x},{fmt(trajectory.u[k, j])},{fmt(trajectory.v[k, j])}\n")
    return buf.getvalue()


def probes_csv(trajectory: Trajectory) -> str:
    buf = io.StringIO()
    buf.write("t,x_probe,u,v\n")
    for x, series in trajectory.probes().items():
        xs = fmt(x)
        for t, (u, v) in zip(trajectory.t, series):
            buf.write(f"{fmt(t)},{xs},{fmt(u)},{fmt(v)}\n")
    return buf.getvalue()


def modes_csv(trajectory: Trajectory) -> str:
    buf = io.StringIO()
    buf.write("t,n,amp_u,amp_v\n")
    K = trajectory.modes.shape[-1]
    for k, t in enumerate(trajectory.t):
        ts = fmt(t)
        for m in range(K):
            buf.write(f"{ts},{m},{fmt(trajectory.modes[k, 0, m])},{fmt(trajectory.modes[k, 1, m])}\n")
    return buf.getvalue()


def manifest(trajectory: Trajectory, diagnosis: Diagnosis | None = None) -> dict:
    cfg = trajectory.config
    out = {
        "params": trajectory.params.to_dict(),
        "grid": {"l": trajectory.grid.l, "M": trajectory.grid.M},
        "config": {
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "save_stride": cfg.save_stride,
            "n_modes": cfg.n_modes,
            "probe_points": list(cfg.probe_points),
            "ic": cfg.ic.to_dict(),
        },
        "files": ["snapshots.csv", "probes.csv", "modes.csv"],
    }
    if diagnosis is not None:
        out["verdict"] = diagnosis.verdict.value
        out["diagnostics"] = {k: v for k, v in asdict(diagnosis).items()
                              if k != "verdict" and v is not None and v != ""}
    return out


def write_outputs(trajectory: Trajectory, out_dir: str, diagnosis: Diagnosis | None = None) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "snapshots.csv": snapshots_csv(trajectory),
        "probes.csv": probes_csv(trajectory),
        "modes.csv": modes_csv(trajectory),
        "manifest.json": dumps(manifest(trajectory, diagnosis)) + "\n",
    }
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def load_trajectory(out_dir: str) -> Trajectory:
    """Rebuild a trajectory from the files written by ``write_outputs``."""
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    params = ModelParams.from_dict(meta["params"])
    grid = Grid(meta["grid"]["l"], int(meta["grid"]["M"]))
    c = meta["config"]
    config = SimConfig(c["dt"], c["t_end"], c["save_stride"], ICSpec.from_dict(c["ic"]),
                       tuple(c["probe_points"]), int(c["n_modes"]))
    snaps = np.loadtxt(os.path.join(out_dir, "snapshots.csv"), delimiter=",", skiprows=1, ndmin=2)
    modes = np.loadtxt(os.path.join(out_dir, "modes.csv"), delimiter=",", skiprows=1, ndmin=2)
    M, K = grid.M, config.n_modes
    nt = snaps.shape[0] // M
    t = snaps[::M, 0]
    u = snaps[:, 2].reshape(nt, M)
    v = snaps[:, 3].reshape(nt, M)
    K = modes.shape[0] // nt
    m = np.stack([modes[:, 2].reshape(nt, K), modes[:, 3].reshape(nt, K)], axis=1)
    return Trajectory(params, grid, config, t, u, v, m)
