"""Command-line interface.

Verbs:
    dj            run or sweep the function-evaluation experiment
    pps           run the pseudo-pure-state preparation
    distance      tabulate closed-form vs numeric gate distances
    validate-rwa  cross-check the approximation ladder on a scaled system
    parse         canonicalize a sequence file
    translate     replace hard pulses with soft pulses in a sequence file

Exit codes: 0 success; 2 configuration or usage error; 3 physics
validation failure (a tabulated or thresholded quantity out of
tolerance).  Outputs are deterministic: floats are rendered with 17
significant digits and no timestamps are embedded, so repeated runs
are byte-identical.

Configuration files are flat key = value text with '#' comments; the
keys are preset, larmor1_hz, delta_hz, j_hz, t2_s, t1_s, and model.
The only preset is 'cytosine'.
"""

from __future__ import annotations

import argparse
import sys as _sys
from pathlib import Path

import numpy as np

from .hamiltonian import (
    TWO_PI, ALL_VARIANTS, ROTATING_SECULAR_HOMO,
    HamiltonianModel, SpinSystem, cytosine, model_from_name,
)
from .sequence import (
    DJ_LABELS, SequenceParseError, format_sequence, parse_sequence,
    translate_hard_to_soft,
)
from .experiment import (
    DISTANCE_KINDS, FID_DT,
    distance_curve, dj_run, dj_sweep, pps_run, rwa_ladder,
    thermal_reference_intensity,
)

DISTANCE_TOL = 1e-8

RWA_THRESHOLDS = {
    "fidelity_lab_vs_rotating": 0.999,
    "fidelity_rotating_vs_secular": 0.99,
    "fidelity_free_lab_vs_rotating": 1.0 - 1e-6,
    "fidelity_free_rotating_vs_secular": 1.0 - 1e-6,
}
RICHARDSON_RANGE = (3.5, 4.5)

# Laboratory-frame integration above this Larmor frequency is refused:
# the step rule would demand billions of steps.
LAB_LARMOR_CEILING_HZ = 10e6


class ConfigError(Exception):
    """Bad configuration or usage; exit code 2."""


class PhysicsValidationError(Exception):
    """A validated physical quantity is out of tolerance; exit code 3."""


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def render_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {render_json(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, np.floating, np.integer))
                   for v in seq)
        if flat:
            return "[" + ", ".join(render_json(v) for v in seq) + "]"
        items = [f"{inner}{render_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot render {type(obj).__name__}")


def write_text(out: str | None, text: str) -> None:
    if out is None or out == "-":
        _sys.stdout.write(text)
        if not text.endswith("\n"):
            _sys.stdout.write("\n")
    else:
        Path(out).write_text(text, encoding="utf-8")


def csv_table(header: tuple[str, ...], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


CONFIG_KEYS = ("preset", "larmor1_hz", "delta_hz", "j_hz", "t2_s", "t1_s",
               "model")


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {ln}: expected key = value, "
                              f"got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"config line {ln}: unknown key {key!r}; "
                              f"known keys: {', '.join(CONFIG_KEYS)}")
        if key in values:
            raise ConfigError(f"config line {ln}: duplicate key {key!r}")
        values[key] = value
    return values


def build_config(args) -> tuple[SpinSystem, HamiltonianModel]:
    """Resolve the spin system and model from config file and flags."""
    values: dict[str, str] = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        values = parse_config_text(path.read_text(encoding="utf-8"))
    preset = values.get("preset", "cytosine")
    if preset != "cytosine":
        raise ConfigError(f"unknown preset {preset!r}; only 'cytosine' "
                          "is available")
    base = cytosine()

    def number(key: str, default: float) -> float:
        if key not in values:
            return default
        try:
            return float(values[key])
        except ValueError:
            raise ConfigError(
                f"config key {key} must be a number, got "
                f"{values[key]!r}") from None

    larmor1 = TWO_PI * number("larmor1_hz", base.omega0_1 / TWO_PI)
    delta = TWO_PI * number("delta_hz", base.delta_omega0 / TWO_PI)
    j = TWO_PI * number("j_hz", base.j / TWO_PI)
    t2 = number("t2_s", base.t2)
    t1 = number("t1_s", base.t1)
    try:
        system = SpinSystem(omega0_1=larmor1, omega0_2=larmor1 + delta,
                            j=j, t2=t2, t1=t1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    model_name = getattr(args, "model", None) or values.get(
        "model", ROTATING_SECULAR_HOMO)
    if model_name not in ALL_VARIANTS:
        raise ConfigError(f"unknown model {model_name!r}; choose from "
                          f"{', '.join(ALL_VARIANTS)}")
    return system, model_from_name(model_name)


def parse_taus(text: str | None) -> float | tuple[float, float] | None:
    if text is None:
        return None
    parts = text.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad width specification {text!r}; expected "
                          "seconds or two comma-separated values") from None
    if len(values) == 1:
        return values[0]
    if len(values) == 2:
        return (values[0], values[1])
    raise ConfigError("width takes one value or an s1,s2 pair")


def parse_sweep(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("sweep takes start,stop,count")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise ConfigError(f"bad sweep specification {text!r}") from None
    if count < 2 or stop <= start:
        raise ConfigError("sweep needs stop > start and count >= 2")
    return np.linspace(start, stop, count)


def spectrum_tables(spec) -> tuple[str, dict]:
    csv = csv_table(
        ("offset_hz", "real", "imag"),
        zip(spec.frequencies, spec.amplitudes.real, spec.amplitudes.imag))
    as_json = {
        "offset_hz": spec.frequencies,
        "real": spec.amplitudes.real,
        "imag": spec.amplitudes.imag,
    }
    return csv, as_json


def cmd_dj(args) -> int:
    system, model = build_config(args)
    taus = parse_taus(args.tau)
    labels = DJ_LABELS if args.label == "all" else (args.label,)
    if args.sweep:
        times = parse_sweep(args.sweep)
        results = dj_sweep(system, model, labels, tuple(times), taus=taus,
                           duration=args.duration, dt_fid=args.dt_fid,
                           jobs=args.jobs)
        rows = []
        for res, (label, t) in zip(
                results, [(l, t) for l in labels for t in times]):
            rows.append((label, t, res.classification, res.left_intensity))
        if args.format == "json":
            payload = {"sweep": [
                {"label": label, "t_j": t, "classification": cls,
                 "left_intensity": inten}
                for label, t, cls, inten in rows]}
            write_text(args.out, render_json(payload) + "\n")
        else:
            write_text(args.out, csv_table(
                ("label", "t_j", "classification", "left_intensity"), rows))
        return 0
    if len(labels) != 1:
        raise ConfigError("single runs need one label; use --sweep for "
                          "grids or pick --label f1..f4")
    reference = thermal_reference_intensity(system, args.duration,
                                            args.dt_fid)
    res = dj_run(labels[0], system, model, total_j_time=args.t_j,
                 taus=taus, duration=args.duration, dt_fid=args.dt_fid,
                 reference=reference)
    spec_csv, spec_json = spectrum_tables(res.spectrum)
    peaks = res.spectrum.peaks
    summary = {
        "label": res.label,
        "classification": res.classification,
        "left_intensity": res.left_intensity,
        "reference_intensity": reference,
        "peaks": [{"offset_hz": hz, "intensity": amp} for hz, amp in peaks],
    }
    if args.format == "json":
        payload = dict(summary)
        payload["spectrum"] = spec_json
        write_text(args.out, render_json(payload) + "\n")
    else:
        write_text(args.out, spec_csv)
        if args.out and args.out != "-":
            peaks_path = Path(args.out).with_suffix(".peaks.csv")
            peaks_path.write_text(csv_table(
                ("offset_hz", "intensity"), peaks), encoding="utf-8")
        _sys.stdout.write(render_json(summary) + "\n")
    return 0


def cmd_pps(args) -> int:
    system, model = build_config(args)
    taus = parse_taus(args.tau)
    res = pps_run(system, model, total_j_time=args.t_j,
                  compensate=args.compensate, taus=taus)
    summary = {
        "populations": {label: res.populations[i]
                        for i, label in enumerate(("00", "01", "10", "11"))},
        "dominant": res.dominant,
        "dominant_is_00": res.dominant == "00",
        "fidelity": res.fidelity,
        "compensate": bool(args.compensate),
    }
    if args.format == "json":
        write_text(args.out, render_json(summary) + "\n")
    else:
        write_text(args.out, csv_table(
            ("state", "population"),
            [(label, res.populations[i])
             for i, label in enumerate(("00", "01", "10", "11"))]))
        _sys.stdout.write(render_json(
            {k: v for k, v in summary.items() if k != "populations"}) + "\n")
    return 0


def cmd_distance(args) -> int:
    system, _ = build_config(args)
    if args.kind not in DISTANCE_KINDS:
        raise ConfigError(f"unknown kind {args.kind!r}; choose from "
                          f"{', '.join(DISTANCE_KINDS)}")
    if args.points < 2 or args.t_max <= args.t_min:
        raise ConfigError("need t_max > t_min and at least two points")
    grid = np.linspace(args.t_min, args.t_max, args.points)
    rows = distance_curve(args.kind, system, grid, t_start=args.t_start)
    if args.format == "json":
        payload = {"kind": args.kind, "rows": [
            {"t": r[0], "closed_form": r[1], "numeric": r[2],
             "abs_diff": r[3]} for r in rows]}
        write_text(args.out, render_json(payload) + "\n")
    else:
        write_text(args.out, csv_table(
            ("t", "closed_form", "numeric", "abs_diff"), rows))
    worst = float(rows[:, 3].max())
    if worst >= DISTANCE_TOL:
        raise PhysicsValidationError(
            f"closed form and numeric distances disagree by {worst:.3g} "
            f">= {DISTANCE_TOL:g}")
    return 0


def cmd_validate_rwa(args) -> int:
    _, _ = build_config(args)
    if args.larmor1_hz > LAB_LARMOR_CEILING_HZ:
        raise ConfigError(
            f"laboratory-frame validation above {LAB_LARMOR_CEILING_HZ:g} "
            "Hz is computationally infeasible; use the scaled default")
    system = cytosine(omega0_1=TWO_PI * args.larmor1_hz)
    report = rwa_ladder(system, tau=args.tau)
    checks = {}
    ok = True
    for name, threshold in RWA_THRESHOLDS.items():
        value = getattr(report, name)
        passed = value > threshold
        ok = ok and passed
        checks[name] = {"value": value, "threshold": threshold,
                        "pass": passed}
    lo, hi = RICHARDSON_RANGE
    for name in ("richardson_lab", "richardson_rotating"):
        value = getattr(report, name)
        passed = lo <= value <= hi
        ok = ok and passed
        checks[name] = {"value": value, "range": [lo, hi], "pass": passed}
    payload = {"larmor1_hz": args.larmor1_hz, "tau": args.tau,
               "checks": checks, "pass": ok}
    if args.format == "json":
        write_text(args.out, render_json(payload) + "\n")
    else:
        rows = [(name, info["value"],
                 "pass" if info["pass"] else "fail")
                for name, info in checks.items()]
        write_text(args.out, csv_table(("check", "value", "status"), rows))
    if not ok:
        raise PhysicsValidationError(
            "approximation-ladder checks failed; see report")
    return 0


def _read_sequence_file(path: str):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"sequence file not found: {p}")
    try:
        return parse_sequence(p.read_text(encoding="utf-8"), name=p.stem)
    except SequenceParseError as exc:
        raise ConfigError(str(exc)) from None


def cmd_parse(args) -> int:
    seq = _read_sequence_file(args.file)
    write_text(args.out, format_sequence(seq))
    return 0


def cmd_translate(args) -> int:
    system, _ = build_config(args)
    seq = _read_sequence_file(args.file)
    taus = parse_taus(args.tau)
    if taus is None:
        raise ConfigError("translate requires --tau")
    try:
        soft = translate_hard_to_soft(seq, taus, system)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_text(args.out, format_sequence(soft))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homonmr",
        description="Simulate two-spin liquid-state NMR computing "
                    "experiments on a shared-coil (same species) register.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="json",
                        help="output format (default json)")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker threads for sweeps")
    common.add_argument("--model", help="Hamiltonian model variant",
                        choices=ALL_VARIANTS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dj", parents=[common],
                       help="function-evaluation experiment")
    p.add_argument("--label", default="f1", choices=DJ_LABELS + ("all",))
    p.add_argument("--t-j", type=float, default=None,
                   help="total coupling-evolution time (s)")
    p.add_argument("--tau", help="soft width (s) or s1,s2 pair; omit for "
                                 "hard pulses")
    p.add_argument("--sweep", help="t-j sweep as start,stop,count (s)")
    p.add_argument("--duration", type=float, default=None,
                   help="acquisition length (s)")
    p.add_argument("--dt-fid", type=float, default=FID_DT,
                   help="acquisition sampling interval (s)")
    p.set_defaults(func=cmd_dj)

    p = sub.add_parser("pps", parents=[common],
                       help="pseudo-pure-state preparation")
    p.add_argument("--t-j", type=float, default=None)
    p.add_argument("--compensate", action="store_true",
                   help="insert the echo inversion pair")
    p.add_argument("--tau", help="soft width (s) or s1,s2 pair")
    p.set_defaults(func=cmd_pps)

    p = sub.add_parser("distance", parents=[common],
                       help="closed-form vs numeric gate distance")
    p.add_argument("--kind", default="free", choices=DISTANCE_KINDS)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--t-start", type=float, default=0.0)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("validate-rwa", parents=[common],
                       help="cross-check the approximation ladder")
    p.add_argument("--larmor1-hz", type=float, default=20e3,
                   help="scaled spin-1 Larmor frequency (Hz)")
    p.add_argument("--tau", type=float, default=5.229e-3,
                   help="probe soft-pulse width (s)")
    p.set_defaults(func=cmd_validate_rwa)

    p = sub.add_parser("parse", parents=[common],
                       help="canonicalize a sequence file")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("translate", parents=[common],
                       help="hard-to-soft sequence translation")
    p.add_argument("file")
    p.add_argument("--tau", help="soft width (s) or s1,s2 pair",
                   required=False)
    p.set_defaults(func=cmd_translate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except PhysicsValidationError as exc:
        print(f"validation failure: {exc}", file=_sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
