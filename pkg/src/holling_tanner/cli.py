"""Command-line interface: ``python -m holling_tanner <command> [options]``.

Every command reads an optional JSON config (``--config``); command-line
flags override config keys.  Results go to stdout and, with ``--out``, to
files in that directory.  Exit codes: 0 success, 2 invalid input, 3
numerical failure, 4 disagreement in ``--strict`` sweeps.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any

from ._format import dumps, fmt
from .bifurcation import diagram
from .critical_sets import INTEGRALITY_TOL, enumerate_codim2, regime_report
from .errors import HollingTannerError, NumericalError, ValidationError
from .kinetics import ModelParams, SystemParams, equilibrium, linear_coefficients
from .normal_form import (
    Region,
    bifurcation_lines,
    classify_region,
    locate_turing_hopf,
    normal_form_coefficients,
    planar_equilibria,
    planar_reduction,
    predict_attractors,
)
from .rdsim import (
    Grid,
    ICSpec,
    SimConfig,
    Tolerances,
    diagnose,
    initial_condition,
    load_trajectory,
    simulate,
    simulate_batch,
    write_outputs,
)
from .spectrum import steady_state_stability

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_DISAGREE = 0, 2, 3, 4

SYSTEM_KEYS = {"a", "b", "d1", "d2"}
TOL_KEYS = {"eps_t", "eps_x", "eps_m", "window"}
SIM_KEYS = {"M", "dt", "t_end", "save_stride", "ic", "probe_points", "n_modes"}

ALLOWED = {
    "analyze": SYSTEM_KEYS | {"l", "r"},
    "diagram": SYSTEM_KEYS | {"r_range", "l_range", "resolution"},
    "codim2": SYSTEM_KEYS | {"l_window"},
    "normalform": SYSTEM_KEYS | {"l_window"},
    "planar": SYSTEM_KEYS | {"l_window", "alpha"},
    "simulate": SYSTEM_KEYS | {"r", "l", "alpha", "l_window"} | SIM_KEYS | TOL_KEYS,
    "classify": {"run_dir"} | TOL_KEYS,
    "sweep": SYSTEM_KEYS | {"l_window", "points", "ics", "workers"} | SIM_KEYS - {"ic"} | TOL_KEYS,
}

REQUIRED = {
    "analyze": SYSTEM_KEYS | {"l"},
    "diagram": SYSTEM_KEYS | {"r_range", "l_range"},
    "codim2": SYSTEM_KEYS | {"l_window"},
    "normalform": SYSTEM_KEYS | {"l_window"},
    "planar": SYSTEM_KEYS | {"l_window", "alpha"},
    "simulate": SYSTEM_KEYS,
    "classify": {"run_dir"},
    "sweep": SYSTEM_KEYS | {"l_window", "points", "ics"},
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return data


def _merge(command: str, config: dict, flags: dict) -> dict:
    merged = dict(config)
    merged.update({k: v for k, v in flags.items() if v is not None})
    unknown = set(merged) - ALLOWED[command]
    if unknown:
        raise ValidationError(f"unknown key(s) for '{command}': {', '.join(sorted(unknown))}")
    missing = REQUIRED[command] - set(merged)
    if missing:
        raise ValidationError(f"missing key(s) for '{command}': {', '.join(sorted(missing))}")
    return merged


def _number(cfg: dict, key: str) -> float:
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"key '{key}' must be a number, got {value!r}")
    return float(value)


def _pair(cfg: dict, key: str) -> tuple[float, float]:
    value = cfg[key]
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ValidationError(f"key '{key}' must be a two-element list")
    lo, hi = (float(v) for v in value)
    return lo, hi


def _system(cfg: dict) -> SystemParams:
    return SystemParams(*(_number(cfg, k) for k in ("a", "b", "d1", "d2")))


def _tolerances(cfg: dict) -> Tolerances:
    return Tolerances(**{k: float(cfg[k]) for k in TOL_KEYS if k in cfg})


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        return [row for k, v in obj.items() for row in _flatten(v, f"{prefix}.{k}" if prefix else str(k))]
    if isinstance(obj, (list, tuple)):
        return [row for i, v in enumerate(obj) for row in _flatten(v, f"{prefix}[{i}]")]
    return [(prefix, obj)]


def _csv_value(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, complex):
        return f"{fmt(v.real)}{'+' if v.imag >= 0 else '-'}{fmt(abs(v.imag))}j"
    return str(v)


def _as_csv(obj: Any) -> str:
    buf = io.StringIO()
    buf.write("key,value\n")
    for k, v in _flatten(obj):
        buf.write(f"{k},{_csv_value(v)}\n")
    return buf.getvalue()


class Output:
    def __init__(self, out_dir: str | None, fmt_: str):
        self.out_dir = out_dir
        self.format = fmt_
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

    def write_file(self, name: str, text: str) -> None:
        if self.out_dir:
            with open(os.path.join(self.out_dir, name), "w", encoding="utf-8") as fh:
                fh.write(text)

    def emit(self, name: str, obj: Any, csv_text: str | None = None) -> None:
        if self.format == "csv":
            text = csv_text if csv_text is not None else _as_csv(obj)
            self.write_file(f"{name}.csv", text)
        else:
            text = dumps(obj) + "\n"
            self.write_file(f"{name}.json", text)
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_analyze(cfg: dict, out: Output, itol: float) -> int:
    system = _system(cfg)
    l = _number(cfg, "l")
    if not (l > 0 and math.isfinite(l)):
        raise ValidationError(f"key 'l' must be a positive finite number, got {l!r}")
    A0, B0 = linear_coefficients(system)
    eq = equilibrium(system)
    report: dict = {"u0": eq.u0, "v0": eq.v0, "A0": A0, "B0": B0}
    if A0 <= 0:
        report["regime"] = "Lemma-1 regime, stable for all r, l"
    else:
        report["regime"] = regime_report(system, l, itol)
    if "r" in cfg:
        params = ModelParams.from_system(system, _number(cfg, "r"), l)
        verdict = steady_state_stability(params)
        report["stability"] = {"status": verdict.status.value, "witnesses": verdict.witnesses}
        if verdict.threshold is not None:
            report["stability"]["threshold"] = verdict.threshold
    out.emit("analyze", report)
    return EXIT_OK


def cmd_diagram(cfg: dict, out: Output, itol: float) -> int:
    system = _system(cfg)
    sample = diagram(system, _pair(cfg, "r_range"), _pair(cfg, "l_range"), int(cfg.get("resolution", 400)))
    inter = sample.intersections_json()
    out.write_file("diagram.csv", sample.to_csv())
    out.write_file("intersections.json", dumps(inter) + "\n")
    if out.format == "csv":
        sys.stdout.write(sample.to_csv())
    else:
        sys.stdout.write(dumps({"curve_points": len(sample.curves), "intersections": inter}) + "\n")
    return EXIT_OK


def cmd_codim2(cfg: dict, out: Output, itol: float) -> int:
    sets = enumerate_codim2(_system(cfg), _pair(cfg, "l_window"))
    body = sets.to_dict()
    body["unique"] = {"L_TT": sets.L_TT, "L_TH": sets.L_TH, "L_TTH": sets.L_TTH}
    buf = io.StringIO()
    buf.write("kind,l,modes,r\n")
    for p in sets.points:
        buf.write(f"{p.kind},{fmt(p.l)},{'-'.join(map(str, p.modes))},{fmt(p.r)}\n")
    out.emit("codim2", body, buf.getvalue())
    return EXIT_OK


def _planar_pipeline(cfg: dict):
    point = locate_turing_hopf(_system(cfg), _pair(cfg, "l_window"))
    coeffs = normal_form_coefficients(point)
    planar = planar_reduction(coeffs)
    lines = bifurcation_lines(planar)
    return point, coeffs, planar, lines


def cmd_normalform(cfg: dict, out: Output, itol: float) -> int:
    point, coeffs, planar, lines = _planar_pipeline(cfg)
    body = {
        "point": {"r": point.r_star, "l": point.l_star, "n_star": point.turing_mode, "omega0": point.omega0},
        "coefficients": coeffs.to_dict(),
        "planar": planar.to_dict(),
        "lines": lines.to_dict(),
    }
    out.emit("normalform", body)
    return EXIT_OK


def cmd_planar(cfg: dict, out: Output, itol: float) -> int:
    _, _, planar, lines = _planar_pipeline(cfg)
    a1, a2 = _pair(cfg, "alpha")
    region = classify_region(planar, a1, a2, lines)
    eqs = planar_equilibria(planar, a1, a2)
    body: dict = {
        "alpha": [a1, a2],
        "eps": list(planar.epsilons(a1, a2)),
        "region": region.value,
        "equilibria": {
            e.name: ({"rho": e.rho, "v": e.v, "stability": e.stability} if e.exists else {"exists": False})
            for e in eqs
        },
    }
    if region is not Region.ON_BOUNDARY:
        body["prediction"] = predict_attractors(planar, region, lines).to_dict()
    out.emit("planar", body)
    return EXIT_OK


def _sim_config(cfg: dict, ic: ICSpec) -> SimConfig:
    kwargs = {k: float(cfg[k]) for k in ("dt", "t_end", "save_stride") if k in cfg}
    if "probe_points" in cfg:
        kwargs["probe_points"] = tuple(float(x) for x in cfg["probe_points"])
    if "n_modes" in cfg:
        kwargs["n_modes"] = int(cfg["n_modes"])
    return SimConfig(ic=ic, **kwargs)


def _sim_params(cfg: dict) -> ModelParams:
    system = _system(cfg)
    if "alpha" in cfg:
        if "r" in cfg or "l" in cfg:
            raise ValidationError("give either 'alpha' (with 'l_window') or 'r' and 'l', not both")
        if "l_window" not in cfg:
            raise ValidationError("'alpha' needs 'l_window' to locate the Turing-Hopf point")
        point = locate_turing_hopf(system, _pair(cfg, "l_window"))
        a1, a2 = _pair(cfg, "alpha")
        return ModelParams.from_system(system, point.r_star + a1, point.l_star + a2)
    if "r" not in cfg or "l" not in cfg:
        raise ValidationError("'simulate' needs 'r' and 'l' (or 'alpha' and 'l_window')")
    return ModelParams.from_system(system, _number(cfg, "r"), _number(cfg, "l"))


def cmd_simulate(cfg: dict, out: Output, itol: float) -> int:
    params = _sim_params(cfg)
    config = _sim_config(cfg, ICSpec.from_dict(cfg.get("ic", {})))
    grid = Grid(params.l, int(cfg.get("M", 128)))
    traj = simulate(params, grid, config)
    diag = diagnose(traj, _tolerances(cfg))
    if out.out_dir:
        write_outputs(traj, out.out_dir, diag)
    summary = {"params": params.to_dict(), "verdict": diag.verdict.value}
    if diag.period is not None:
        summary["period"] = diag.period
    if diag.note:
        summary["note"] = diag.note
    out.emit("summary", summary)
    return EXIT_OK


def cmd_classify(cfg: dict, out: Output, itol: float) -> int:
    traj = load_trajectory(str(cfg["run_dir"]))
    diag = diagnose(traj, _tolerances(cfg))
    body = {"verdict": diag.verdict.value, "temporal_var": diag.temporal_var,
            "spatial_var": diag.spatial_var, "higher_mode_amp": diag.higher_mode_amp}
    if diag.period is not None:
        body["period"] = diag.period
    if diag.note:
        body["note"] = diag.note
    out.emit("classify", body)
    return EXIT_OK


def _run_chunk(args):
    cases, M, config, tol = args
    results = simulate_batch(cases, M, config)
    out = []
    for res in results:
        if isinstance(res, Exception):
            out.append(("error", f"{type(res).__name__}: {res}"))
        else:
            try:
                out.append(("ok", diagnose(res, tol).verdict.value))
            except HollingTannerError as exc:
                out.append(("error", f"{type(exc).__name__}: {exc}"))
    return out


def cmd_sweep(cfg: dict, out: Output, itol: float, strict: bool) -> int:
    system = _system(cfg)
    point = locate_turing_hopf(system, _pair(cfg, "l_window"))
    planar = planar_reduction(normal_form_coefficients(point))
    lines = bifurcation_lines(planar)
    ics = [ICSpec.from_dict(d) for d in cfg["ics"]]
    config = _sim_config(cfg, ICSpec())
    tol = _tolerances(cfg)
    M = int(cfg.get("M", 128))
    rows, cases, case_rows = [], [], []
    for pt in cfg["points"]:
        a1, a2 = (float(v) for v in pt)
        region = classify_region(planar, a1, a2, lines)
        predicted = (sorted(a.value for a in predict_attractors(planar, region, lines).stable)
                     if region is not Region.ON_BOUNDARY else [])
        params = ModelParams.from_system(system, point.r_star + a1, point.l_star + a2)
        grid = Grid(params.l, M)
        for k, ic in enumerate(ics):
            row = {"alpha": [a1, a2], "ic": k, "region": region.value, "predicted": predicted}
            try:
                cases.append((params, initial_condition(grid, ic, params)))
                case_rows.append(row)
            except ValidationError as exc:
                row["error"] = str(exc)
            rows.append(row)

    workers = max(1, int(cfg.get("workers", 1)))
    chunks = [cases[i::workers] for i in range(workers)]
    if workers == 1 or len(cases) <= 1:
        chunk_results = [_run_chunk((cases, M, config, tol))]
        chunks = [cases]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(_run_chunk, [(c, M, config, tol) for c in chunks]))
    # undo the round-robin split so rows keep input order
    results: list = [None] * len(cases)
    for w, chunk in enumerate(chunk_results):
        for j, res in enumerate(chunk):
            results[w + j * len(chunks)] = res
    for row, (status, value) in zip(case_rows, results):
        if status == "ok":
            row["observed"] = value
            row["agree"] = value in row["predicted"]
        else:
            row["error"] = value
    for row in rows:
        row.setdefault("agree", False)

    buf = io.StringIO()
    buf.write("alpha1,alpha2,ic,region,predicted,observed,agree\n")
    for row in rows:
        buf.write(f"{fmt(row['alpha'][0])},{fmt(row['alpha'][1])},{row['ic']},{row['region']},"
                  f"{'|'.join(row['predicted'])},{row.get('observed', 'error')},{json.dumps(row['agree'])}\n")
    out.emit("sweep", {"rows": rows, "agreement": sum(r["agree"] for r in rows), "total": len(rows)},
             buf.getvalue())
    if strict and not all(r["agree"] for r in rows):
        return EXIT_DISAGREE
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "diagram": cmd_diagram,
    "codim2": cmd_codim2,
    "normalform": cmd_normalform,
    "planar": cmd_planar,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--out", help="directory for output files")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--integrality-tol", type=float, default=INTEGRALITY_TOL)
    common.add_argument("--strict", action="store_true", help="sweep: exit 4 on any disagreement")

    parser = argparse.ArgumentParser(prog="holling-tanner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def params(p, *names):
        for name in names:
            p.add_argument(f"--{name.replace('_', '-')}", type=float, dest=name)

    def pair(p, name, metavar=("LO", "HI")):
        p.add_argument(f"--{name.replace('_', '-')}", type=float, nargs=2, dest=name, metavar=metavar)

    p = sub.add_parser("analyze", parents=[common], help="stability and regime report")
    params(p, "a", "b", "d1", "d2", "l", "r")
    p = sub.add_parser("diagram", parents=[common], help="Hopf/Turing curves and intersections")
    params(p, "a", "b", "d1", "d2")
    pair(p, "r_range")
    pair(p, "l_range")
    p.add_argument("--resolution", type=int)
    p = sub.add_parser("codim2", parents=[common], help="codimension-two sets in an l window")
    params(p, "a", "b", "d1", "d2")
    pair(p, "l_window")
    p = sub.add_parser("normalform", parents=[common], help="Turing-Hopf normal form")
    params(p, "a", "b", "d1", "d2")
    pair(p, "l_window")
    p = sub.add_parser("planar", parents=[common], help="region and predicted attractors at alpha")
    params(p, "a", "b", "d1", "d2")
    pair(p, "l_window")
    pair(p, "alpha", ("A1", "A2"))
    p = sub.add_parser("simulate", parents=[common], help="run the PDE and classify the attractor")
    params(p, "a", "b", "d1", "d2", "r", "l", "dt", "t_end", "save_stride")
    pair(p, "l_window")
    pair(p, "alpha", ("A1", "A2"))
    p.add_argument("--M", type=int, dest="M")
    params(p, *sorted(TOL_KEYS))
    p = sub.add_parser("classify", parents=[common], help="classify a saved run")
    p.add_argument("--run-dir", dest="run_dir")
    params(p, *sorted(TOL_KEYS))
    p = sub.add_parser("sweep", parents=[common], help="predicted versus simulated attractors")
    params(p, "a", "b", "d1", "d2", "dt", "t_end", "save_stride")
    pair(p, "l_window")
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--workers", type=int)
    params(p, *sorted(TOL_KEYS))
    return parser


GLOBAL = {"config", "out", "format", "integrality_tol", "strict", "command"}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in GLOBAL}
    try:
        if not (args.integrality_tol >= 0 and math.isfinite(args.integrality_tol)):
            raise ValidationError("--integrality-tol must be a finite non-negative number")
        cfg = _merge(args.command, _load_config(args.config), flags)
        out = Output(args.out, args.format)
        handler = COMMANDS[args.command]
        if args.command == "sweep":
            return handler(cfg, out, args.integrality_tol, args.strict)
        return handler(cfg, out, args.integrality_tol)
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HollingTannerError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
