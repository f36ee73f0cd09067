"""
wforge: Command-Line Driver

Action:
Runs one pipeline stage on a surface described by a plain-text config file
and writes the results to an output directory:
    report.json          every residual and energy, keys sorted, no timings
    fields.csv           per-vertex fields (analyze)
    surface.obj          mesh of the input surface (export)
    surface_hat.obj      mesh of the mu-Darboux transform (darboux)

Usage:
    python wforge.py analyze  --config configs/clifford_analyze.cfg
    python wforge.py darboux  --config configs/clifford_darboux.cfg --set mu=1+i
    python wforge.py sequence --config configs/catenoid_sequence.cfg --set grid.n=48

Config file (sections and keys, all optional):
    [surface]     kind, R, r, half_width, coeffs, convention, patch
    [grid]        n, stencil
    [run]         mu, lambdas, n_max, accept_torus, check_basis, out_dir,
                  projection, pole, fields_csv, report_timestamp
    [tolerances]  conformality_max, willmore_accept, identity_max

Exit codes:
    0  success
    2  a validation check failed (listed under 'validation' in report.json)
    1  configuration, numerical or I/O error ("Error: ..." on stderr)

Environment:
    WFORGE_THREADS caps BLAS/OpenMP threads; it is exported before numpy loads.
"""

import os
import sys

_threads = os.environ.get("WFORGE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[_var] = _threads

import argparse
import configparser
import json
import re
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from errors import ConfigError, PointAtInfinity, WforgeError
from flatfam import ConnectionFamily, flatness_report
from grid_calc import d_oneform, save_fields_csv, star, wedge_trace
from immersion import SurfaceSpec, generate, project, save_obj
from meancurvsphere import analyze
from mudarboux import darboux_report
from sequences import willmore_sequence

# --- Configuration ---
COMMANDS = ("analyze", "flatness", "darboux", "sequence", "export")
EXIT_OK, EXIT_ERROR, EXIT_VALIDATION = 0, 1, 2
REPORT_NAME = "report.json"
FIELDS_NAME = "fields.csv"
# ---------------------


def parse_complex(text: str) -> complex:
    """Accepts '2', '0.3', '2+0i', '1+i', '-i', '1.5e-1-2j'."""
    s = str(text).strip().replace(" ", "")
    s = re.sub(r"(^|[+-])([ij])$", r"\g<1>1\2", s)
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        raise ValueError(f"not a complex number: '{text}'")


def parse_bool(text: str) -> bool:
    key = str(text).strip().lower()
    if key not in configparser.ConfigParser.BOOLEAN_STATES:
        raise ValueError(f"not a boolean: '{text}'")
    return configparser.ConfigParser.BOOLEAN_STATES[key]


def parse_complex_list(text: str) -> List[complex]:
    return [parse_complex(t) for t in str(text).split(",") if t.strip()]


def parse_float_list(text: str) -> List[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def parse_optional_float(text: str) -> Optional[float]:
    s = str(text).strip().lower()
    return None if s in ("", "none", "auto") else float(s)


def parse_coeffs(text: str):
    """Twistor coefficients as JSON lists; entries may be numbers or strings like '1+2i'."""
    s = str(text).strip()
    if s.lower() in ("", "none", "default"):
        return None
    try:
        raw = json.loads(s)
    except json.JSONDecodeError as exc:
        raise ValueError(f"coeffs is not a JSON list: {exc.msg}")
    if not isinstance(raw, list) or len(raw) != 4:
        raise ValueError("coeffs needs four coefficient lists")
    return [[parse_complex(c) if isinstance(c, str) else complex(c) for c in comp] for comp in raw]


# section -> key -> (parser, default)
SCHEMA = {
    "surface": {
        "kind": (str, "clifford"),
        "R": (float, 3.0),
        "r": (float, 1.0),
        "half_width": (parse_optional_float, None),
        "coeffs": (parse_coeffs, None),
        "convention": (str, "jleft"),
        "patch": (parse_bool, False),
    },
    "grid": {
        "n": (int, 64),
        "stencil": (str, "central"),
    },
    "run": {
        "mu": (parse_complex, 2.0 + 0j),
        "lambdas": (parse_complex_list, [2.0, 0.5, 1 + 1j]),
        "n_max": (int, 4),
        "accept_torus": (parse_bool, False),
        "check_basis": (parse_bool, True),
        "out_dir": (str, "wforge_out"),
        "projection": (str, "stereographic"),
        "pole": (parse_float_list, [0.0, 0.0, 0.0, 1.0]),
        "fields_csv": (parse_bool, True),
        "report_timestamp": (parse_bool, False),
    },
    "tolerances": {
        "conformality_max": (float, 1e-2),
        "willmore_accept": (float, 0.02),
        "identity_max": (float, 1e-6),
    },
}

# bare keys accepted by --set
BARE_KEYS = {
    "surface": ("surface", "kind"),
    "grid": ("grid", "n"),
}
for _section, _keys in SCHEMA.items():
    for _key in _keys:
        BARE_KEYS.setdefault(_key, (_section, _key))


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    """(section, key) -> line number, and (section, '') for headers."""
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, ""), lineno)
            continue
        m = re.match(r"^([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip()), lineno)
    return lines


def default_config() -> Dict[str, Dict]:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def _convert(section: str, key: str, value: str, line: Optional[int] = None):
    parser, _ = SCHEMA[section][key]
    try:
        return parser(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}", line=line)


def load_config(path=None, overrides=()) -> Dict[str, Dict]:
    """Defaults, then the config file, then --set overrides."""
    cfg = default_config()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config '{path}': {exc.strerror}")
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            if line is None and getattr(exc, "errors", None):
                line = exc.errors[0][0]
            raise ConfigError(f"syntax error in '{path}': {exc.message.splitlines()[0]}", line=line)
        lines = _key_lines(text)
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lines.get((section, "")))
            for key, value in parser.items(section):
                line = lines.get((section, key))
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key '{key}' in [{section}]", line=line)
                cfg[section][key] = _convert(section, key, value, line)

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got '{item}'")
        name, value = (s.strip() for s in item.split("=", 1))
        if "." in name:
            section, key = name.split(".", 1)
            if section not in SCHEMA or key not in SCHEMA[section]:
                raise ConfigError(f"unknown setting '{name}'")
        elif name in BARE_KEYS:
            section, key = BARE_KEYS[name]
        else:
            raise ConfigError(f"unknown setting '{name}'")
        cfg[section][key] = _convert(section, key, value)
    return cfg


def surface_spec(cfg: Dict[str, Dict]) -> SurfaceSpec:
    s, g = cfg["surface"], cfg["grid"]
    return SurfaceSpec(kind=s["kind"], n=g["n"], R=s["R"], r=s["r"], half_width=s["half_width"],
                       coeffs=s["coeffs"], convention=s["convention"], stencil=g["stencil"],
                       patch=s["patch"])


def to_jsonable(obj):
    """numpy scalars and arrays to plain Python; complex numbers to [re, im]; non-finite to null."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def write_report(path, report: Dict, timestamp: bool = False) -> None:
    payload = dict(report)
    if timestamp:
        payload["header"] = dict(payload.get("header", {}),
                                 generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    with open(path, "w") as fh:
        fh.write(json.dumps(to_jsonable(payload), sort_keys=True, indent=2))
        fh.write("\n")


# ==========================================
# Commands
# ==========================================

def _check(checks: List[Dict], name: str, value: float, limit: float) -> None:
    checks.append({"check": name, "value": value, "limit": limit, "ok": bool(value <= limit)})


def run_analyze(cfg, imm, out: Path, verbose: bool):
    sf, hp, rep = analyze(imm, cfg["tolerances"]["conformality_max"], verbose=verbose)
    tol = cfg["tolerances"]["identity_max"]
    checks = []
    for key in ("s_squared_residual", "eq3_residual", "ds_identity_residual"):
        _check(checks, key, rep[key], tol)
    if cfg["run"]["fields_csv"]:
        save_fields_csv(out / FIELDS_NAME, imm.grid, {
            "f": imm.f,
            "willmore_density": 2.0 * wedge_trace(hp.A, star(hp.A)),
            "d_star_A": d_oneform(star(hp.A), imm.grid),
        })
    return {"analysis": rep}, checks


def run_flatness(cfg, imm, out: Path, verbose: bool):
    sf, hp, _ = analyze(imm, cfg["tolerances"]["conformality_max"], verbose=verbose)
    fam = ConnectionFamily.from_hopf(sf, hp)
    run = cfg["run"]
    rep = flatness_report(fam, run["mu"], lambdas=run["lambdas"], accept_torus=run["accept_torus"])
    checks = [{"check": "spanning_ok", "value": rep["spanning_margin"], "limit": None,
               "ok": bool(rep["spanning_ok"])}]
    return {"flatness": rep}, checks


def run_darboux(cfg, imm, out: Path, verbose: bool):
    sf, hp, _ = analyze(imm, cfg["tolerances"]["conformality_max"], verbose=verbose)
    run = cfg["run"]
    rep, sf_hat, L_hat = darboux_report(sf, hp, run["mu"], accept_torus=run["accept_torus"],
                                        check_basis=run["check_basis"], verbose=verbose)
    tol = cfg["tolerances"]["identity_max"]
    checks = []
    _check(checks, "hatS_squared", rep["hatS_squared"], tol)
    _check(checks, "eq11_hatS", rep["eq11_hatS"], tol)
    try:
        clamped = save_obj(out / "surface_hat.obj", project(L_hat, f"{imm.name}_hat"),
                           run["projection"], run["pole"])
        rep["surface_hat_obj"] = {"written": True, "clamped": clamped}
    except PointAtInfinity as exc:
        rep["surface_hat_obj"] = {"written": False, "reason": str(exc)}
    return {"darboux": rep}, checks


def run_sequence(cfg, imm, out: Path, verbose: bool):
    rep = willmore_sequence(imm, n_max=cfg["run"]["n_max"],
                            willmore_accept=cfg["tolerances"]["willmore_accept"], verbose=verbose)
    checks = [{"check": "shape", "value": rep["shape"], "limit": None,
               "ok": rep["shape"] != "inconsistent"}]
    return {"sequence": rep}, checks


def run_export(cfg, imm, out: Path, verbose: bool):
    run = cfg["run"]
    path = out / "surface.obj"
    clamped = save_obj(path, imm, run["projection"], run["pole"])
    rep = {"path": path.name, "projection": run["projection"], "pole": run["pole"],
           "vertices": imm.grid.nx * imm.grid.ny, "clamped": clamped}
    return {"export": rep}, []


RUNNERS = {
    "analyze": run_analyze,
    "flatness": run_flatness,
    "darboux": run_darboux,
    "sequence": run_sequence,
    "export": run_export,
}


def print_summary(checks: List[Dict]) -> None:
    print(f"{'-' * 60}")
    print(f"{'Check':<28} | {'Value':>12} | Status")
    print(f"{'-' * 60}")
    for c in checks:
        value = c["value"]
        shown = f"{value:>12.3e}" if isinstance(value, (float, np.floating)) else f"{str(value):>12}"
        print(f"{c['check']:<28} | {shown} | {'ok' if c['ok'] else 'FAILED'}")


def run(command: str, cfg: Dict[str, Dict], verbose: bool = False) -> Tuple[int, Dict]:
    """Executes one command. Returns (exit code, report)."""
    t0 = time.time()
    out = Path(cfg["run"]["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    print(f"\n{'=' * 60}")
    print(f"WFORGE {command.upper()} | surface: {cfg['surface']['kind']} | n: {cfg['grid']['n']}")
    print(f"{'=' * 60}")

    imm = generate(surface_spec(cfg))
    print(f"[generate] {imm.name} on {imm.grid.nx}x{imm.grid.ny} {imm.grid.topology} "
          f"({time.time() - t0:.2f}s)")
    t1 = time.time()
    sections, checks = RUNNERS[command](cfg, imm, out, verbose)
    print(f"[{command}] done ({time.time() - t1:.2f}s)")

    report = {"header": {"tool": "wforge", "command": command, "config": cfg}}
    report.update(sections)
    report["validation"] = [c["check"] for c in checks if not c["ok"]]
    write_report(out / REPORT_NAME, report, timestamp=cfg["run"]["report_timestamp"])
    print(f"[report] {out / REPORT_NAME}")
    if checks:
        print_summary(checks)
    print(f"{'=' * 60}")
    print(f"Total time: {time.time() - t0:.2f}s")
    return (EXIT_VALIDATION if report["validation"] else EXIT_OK), report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wforge", description="Quaternionic Willmore-surface toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", default=None, help="plain-text config file with sections")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a setting (section.key=value or a bare key); repeatable")
    ap.add_argument("-v", "--verbose", action="store_true", help="print per-stage diagnostics")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        code, _ = run(args.command, cfg, verbose=args.verbose)
        return code
    except WforgeError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
