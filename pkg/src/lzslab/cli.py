"""Command-line front end.

    lzslab <command> [--config FILE] [--set KEY=VALUE ...] [--out DIR]
                     [--jobs K] [--strict] [--quick] [--paper-figure N]

Commands write CSV curves (17 significant digits, '#' metadata lines) to
the output directory, which defaults to $LZSLAB_OUT_DIR or ./lzslab_out.
Exit status: 0 success, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BoundaryContamination, ConfigError, LZSError
from .lzs import LZSCase
from .propagator import IntegratorConfig
from .selftest import run_suite
from .ssh import (SSHParams, band_structure_table, bloch_oscillation, exceptional_points,
                  lzs_prediction, period_populations)
from .twolevel import GenericLZParams, asymptotic_band_populations, band_populations
from .waveguide import (WaveguideConfig, analytic_com, center_of_mass, com_series, propagate,
                        write_com_series, write_snapshots)

# ---------------------------------------------------------------- schema

_REAL, _INT, _STR, _REALS = "real", "int", "str", "reals"

SCHEMA = {
    "lz-populations": {
        "delta": (_REAL, 9 / 32),
        "delta_primes": (_REALS, [0.0, 1.0, 1.5, 2.0]),
        "F": (_REAL, 1.0),
        "za_min": (_REAL, 1.0),
        "za_max": (_REAL, 40.0),
        "n_points": (_INT, 200),
        "basis": (_STR, "adiabatic"),
    },
    "bloch-populations": {
        "J": (_REAL, 1.0), "alpha": (_REAL, 0.1), "gamma": (_REAL, 0.1),
        "E_field": (_REAL, 0.01), "k0": (_REAL, 0.0), "band0": (_STR, "lower"),
        "n_samples": (_INT, 2000),
    },
    "band-structure": {
        "J": (_REAL, 1.0), "alpha": (_REAL, 0.1), "gamma": (_REAL, 0.1),
        "n_k": (_INT, 201),
    },
    "lzs-sweep": {
        "J": (_REAL, 1.0), "alpha": (_REAL, 0.2), "gamma": (_REAL, 0.2),
        "E_min": (_REAL, 0.01), "E_max": (_REAL, 0.15), "n_points": (_INT, 30),
    },
    "waveguide": {
        "J": (_REAL, 1.0), "alpha": (_REAL, 0.1), "gamma": (_REAL, 0.1),
        "E_field": (_REAL, 0.05), "n_sites": (_INT, 160), "x0": (_REAL, None),
        "width": (_REAL, 8.0), "samples_per_period": (_INT, 400),
        "mode": (_STR, "single"),
        "E_min": (_REAL, 0.03), "E_max": (_REAL, 0.1), "n_points": (_INT, 15),
    },
    "selftest": {},
}

COMMANDS = list(SCHEMA) + ["emit-config"]

# figure number -> (command, parameter overrides)
PAPER_FIGURES = {
    "1": ("lz-populations", {}),
    "2": ("bloch-populations", {}),
    "3": ("band-structure", {}),
    "3b": ("band-structure", {"gamma": 0.3}),
    "4": ("lzs-sweep", {}),
    "5": ("lzs-sweep", {"alpha": 0.1, "gamma": 0.3, "E_min": 0.02}),
    "7": ("waveguide", {}),
    "8": ("waveguide", {"mode": "sweep", "n_sites": 240}),
    "8b": ("waveguide", {"mode": "sweep", "n_sites": 240, "gamma": 0.3}),
}


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    output_path: str | None = None

    def to_json(self) -> str:
        doc = {"command": self.command, "output_path": self.output_path,
               "parameters": self.parameters}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(doc, dict) or "command" not in doc:
            raise ConfigError(f"{source}:1: expected an object with a 'command' key")
        unknown = set(doc) - {"command", "parameters", "output_path"}
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"{source}:{_line_of(text, key)}: unknown top-level key {key!r}")
        params = doc.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{source}:{_line_of(text, 'parameters')}: 'parameters' must be an object")
        cfg = cls(doc["command"], params, doc.get("output_path"))
        cfg.parameters = validate(cfg.command, params, text, source)
        return cfg


def _line_of(text: str, key: str) -> int:
    needle = json.dumps(key)
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return 1


def _coerce(kind: str, value, key: str):
    if kind == _REAL:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{key!r} must be a real number")
        if not math.isfinite(value):
            raise ValueError(f"{key!r} must be finite")
        return float(value)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{key!r} must be an integer")
        return int(value)
    if kind == _STR:
        if not isinstance(value, str):
            raise ValueError(f"{key!r} must be a string")
        return value
    if not isinstance(value, (list, tuple)) or not value:
        raise ValueError(f"{key!r} must be a non-empty list of reals")
    return [_coerce(_REAL, v, key) for v in value]


def validate(command: str, params: dict, text: str = "", source: str = "<parameters>") -> dict:
    """Fill defaults and type-check ``params`` against the command schema."""
    if command not in SCHEMA:
        raise ConfigError(f"{source}:{_line_of(text, 'command')}: unknown command {command!r}")
    schema = SCHEMA[command]
    out = {}
    for key, value in params.items():
        if key not in schema:
            raise ConfigError(f"{source}:{_line_of(text, key)}: unknown parameter {key!r} "
                              f"for {command}")
        try:
            out[key] = _coerce(schema[key][0], value, key)
        except ValueError as exc:
            raise ConfigError(f"{source}:{_line_of(text, key)}: {exc}") from None
    for key, (_, default) in schema.items():
        out.setdefault(key, list(default) if isinstance(default, list) else default)
    _check_ranges(command, out, text, source)
    return out


def _check_ranges(command, p, text, source):
    def bad(key, msg):
        raise ConfigError(f"{source}:{_line_of(text, key)}: {msg}")
    for key in ("n_points", "n_samples", "n_k", "samples_per_period"):
        if key in p and p[key] < 2:
            bad(key, f"{key!r} must be at least 2")
    if command == "lz-populations":
        if not 0 < p["za_min"] < p["za_max"]:
            bad("za_min", "need 0 < za_min < za_max")
        if p["F"] <= 0:
            bad("F", "F must be positive")
        if p["basis"] not in ("adiabatic", "diabatic"):
            bad("basis", "basis must be 'adiabatic' or 'diabatic'")
    if "E_min" in p and not 0 < p["E_min"] < p["E_max"]:
        bad("E_min", "need 0 < E_min < E_max")
    if command == "bloch-populations" and p["band0"] not in ("lower", "upper"):
        bad("band0", "band0 must be 'lower' or 'upper'")
    if command == "waveguide" and p["mode"] not in ("single", "sweep"):
        bad("mode", "mode must be 'single' or 'sweep'")


# --------------------------------------------------------------- output

@dataclass
class SweepResult:
    axis_name: str
    axis: list
    curves: dict
    metadata: dict

    def __post_init__(self):
        for name, values in self.curves.items():
            if len(values) != len(self.axis):
                raise ValueError(f"curve {name!r} has {len(values)} points, axis {len(self.axis)}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            val = self.metadata[key]
            if not isinstance(val, str):
                val = json.dumps(val, sort_keys=True, separators=(",", ":"))
            buf.write(f"# {key}: {val}\n")
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.curves)
        w.writerow([self.axis_name] + names)
        for i, x in enumerate(self.axis):
            w.writerow([_fmt(x)] + [_fmt(self.curves[n][i]) for n in names])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return "nan"
    return "%.17g" % (v + 0.0)


def _metadata(cfg: RunConfig) -> dict:
    return {"lzslab_version": __version__, "command": cfg.command, "parameters": cfg.parameters}


def _pool_map(func, items, jobs: int):
    """Ordered map; a pool is used only when it can help."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(func, items))


def _ssh(p, E=None, n_sites=None) -> SSHParams:
    kw = dict(J=p["J"], alpha=p["alpha"], gamma=p["gamma"])
    if E is not None:
        kw["E_field"] = E
    if n_sites is not None:
        kw["N"] = n_sites
    return SSHParams(**kw)


# ------------------------------------------------------------- commands

def _lz_point(args):
    F, delta, dp, za, basis = args
    params = GenericLZParams.from_adiabatic(F, delta, dp)
    pops = band_populations(params, za / math.sqrt(F), basis)
    return pops.p_minus_plus, pops.p_minus_minus


def cmd_lz_populations(cfg: RunConfig, jobs: int = 1) -> dict:
    p = cfg.parameters
    za = np.linspace(p["za_min"], p["za_max"], p["n_points"])
    curves = {}
    meta = _metadata(cfg)
    for dp in p["delta_primes"]:
        vals = _pool_map(_lz_point, [(p["F"], p["delta"], dp, z, p["basis"]) for z in za], jobs)
        mp = np.array([v[0] for v in vals])
        mm = np.array([v[1] for v in vals])
        params = GenericLZParams.from_adiabatic(p["F"], p["delta"], dp)
        cls = asymptotic_band_populations(p["delta"], dp, params, p["basis"])
        tag = f"[dp={dp:g}]"
        curves["P_mp" + tag] = mp.tolist()
        curves["P_mm" + tag] = mm.tolist()
        for name, branch, series in (("P_mp", cls.p_minus_plus, mp), ("P_mm", cls.p_minus_minus, mm)):
            curves["asym_" + name + tag] = _overlay(branch, p["delta"], za, series).tolist()
            meta[f"branch_{name}{tag}"] = branch.kind + (
                f" exponent={branch.exponent:g}" if branch.exponent is not None else "")
    return {"lz_populations.csv": SweepResult("z_a", za.tolist(), curves, meta)}


def _overlay(branch, delta, za, series):
    if branch.kind == "power_law":
        # reference power law anchored at the last numeric point
        return series[-1] * (za / za[-1]) ** branch.exponent
    if branch.value is None:
        return np.full_like(za, np.nan)
    return np.broadcast_to(branch.evaluate(delta, za), za.shape).astype(float)


def cmd_bloch_populations(cfg: RunConfig, jobs: int = 1) -> dict:
    p = cfg.parameters
    sp = _ssh(p, p["E_field"])
    traj = bloch_oscillation(sp, p["k0"], p["band0"], cfg=None, n_samples=p["n_samples"])
    up = [x[0] if x is not None else None for x in traj.populations]
    low = [x[1] if x is not None else None for x in traj.populations]
    if p["band0"] == "lower":
        curves = {"P_mp": up, "P_mm": low}
    else:
        curves = {"P_pp": up, "P_pm": low}
    return {"bloch_populations.csv": SweepResult("t", traj.times.tolist(), curves, _metadata(cfg))}


def cmd_band_structure(cfg: RunConfig, jobs: int = 1) -> dict:
    p = cfg.parameters
    sp = _ssh(p)
    kd, e = band_structure_table(sp, p["n_k"])
    meta = _metadata(cfg)
    meta["exceptional_points_kd"] = [k * sp.d for k in exceptional_points(sp)]
    curves = {"re_E_plus": e.real.tolist(), "im_E_plus": e.imag.tolist(),
              "re_E_minus": (-e.real).tolist(), "im_E_minus": (-e.imag).tolist()}
    return {"band_structure.csv": SweepResult("kd", kd.tolist(), curves, meta)}


def _lzs_point(args):
    J, alpha, gamma, E = args
    sp = SSHParams(J=J, alpha=alpha, gamma=gamma, E_field=E)
    ex = period_populations(sp)
    an = lzs_prediction(sp)
    return ex.p_minus_plus, an.p_minus_plus, ex.p_minus_minus, an.p_minus_minus


def cmd_lzs_sweep(cfg: RunConfig, jobs: int = 1) -> dict:
    p = cfg.parameters
    Es = np.linspace(p["E_min"], p["E_max"], p["n_points"])
    vals = np.array(_pool_map(_lzs_point, [(p["J"], p["alpha"], p["gamma"], E) for E in Es], jobs))
    curves = {"P_mp_exact": vals[:, 0].tolist(), "P_mp_analytic": vals[:, 1].tolist(),
              "abs_diff": np.abs(vals[:, 0] - vals[:, 1]).tolist(),
              "P_mm_exact": vals[:, 2].tolist(), "P_mm_analytic": vals[:, 3].tolist()}
    meta = _metadata(cfg)
    meta["lzs_case"] = LZSCase.CASE_I.name
    return {"lzs_sweep.csv": SweepResult("E_field", Es.tolist(), curves, meta)}


def _waveguide_cfg(p, E, sample_every=None) -> WaveguideConfig:
    sp = _ssh(p, E, p["n_sites"])
    return WaveguideConfig(sp, x0=p["x0"], l=p["width"], sample_every=sample_every)


def _waveguide_point(args):
    p, E, strict = args
    cfg = _waveguide_cfg(p, E, sample_every=2 * math.pi / E)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundaryContamination)
        states = propagate(cfg, strict=strict)
    return (center_of_mass(states[-1], cfg.ssh.d), analytic_com(cfg.ssh, cfg.x0, "full_period"),
            len(caught) > 0)


def cmd_waveguide(cfg: RunConfig, jobs: int = 1, strict: bool = False) -> dict:
    p = cfg.parameters
    meta = _metadata(cfg)
    if p["mode"] == "sweep":
        Es = np.linspace(p["E_min"], p["E_max"], p["n_points"])
        vals = _pool_map(_waveguide_point, [(p, E, strict) for E in Es], jobs)
        ex = np.array([v[0] for v in vals])
        an = np.array([v[1] for v in vals])
        meta["x0"] = _waveguide_cfg(p, Es[0]).x0
        flagged = [float(E) for E, v in zip(Es, vals) if v[2]]
        if flagged:
            meta["edge_warning_E"] = flagged
        curves = {"com_exact": ex.tolist(), "com_analytic": an.tolist(),
                  "abs_diff": np.abs(ex - an).tolist()}
        return {"waveguide_com_sweep.csv": SweepResult("E_field", Es.tolist(), curves, meta)}
    period = 2 * math.pi / p["E_field"]
    wcfg = _waveguide_cfg(p, p["E_field"], sample_every=period / p["samples_per_period"])
    states = propagate(wcfg, strict=strict)
    meta["x0"] = wcfg.x0
    meta["analytic_com_half_period"] = analytic_com(wcfg.ssh, wcfg.x0, "half_period")
    meta["analytic_com_full_period"] = analytic_com(wcfg.ssh, wcfg.x0, "full_period")
    head = [f"{k}: {v if isinstance(v, str) else json.dumps(v, sort_keys=True, separators=(',', ':'))}"
            for k, v in sorted(meta.items())]
    return {"waveguide_snapshots.csv": (write_snapshots, states, wcfg.ssh, head),
            "waveguide_com.csv": (write_com_series, com_series(states, wcfg.ssh), head)}


def cmd_selftest(cfg: RunConfig, quick: bool = False) -> tuple:
    results = run_suite(quick=quick)
    report = {"lzslab_version": __version__, "quick": quick,
              "checks": [r.as_dict() for r in results],
              "passed": all(r.passed for r in results)}
    return report, results


# --------------------------------------------------------------- driver

def _out_dir(args) -> Path:
    root = args.out or os.environ.get("LZSLAB_OUT_DIR") or "lzslab_out"
    return Path(root)


def _write_outputs(outputs: dict, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, item in outputs.items():
        path = out / name
        if isinstance(item, SweepResult):
            path.write_text(item.to_csv())
        elif name.endswith("snapshots.csv"):
            writer, states, params, head = item
            writer(path, states, params, head)
        else:
            writer, rows, head = item
            writer(path, rows, head)
        written.append(str(path))
    return written


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lzslab", description=__doc__.split("\n")[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="what to run (may be omitted with --paper-figure or --config)")
    ap.add_argument("target", nargs="?", help="command whose config emit-config prints")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override one parameter (JSON value)")
    ap.add_argument("--out", help="output directory (default $LZSLAB_OUT_DIR or ./lzslab_out)")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="worker processes for sweeps (default: all cores)")
    ap.add_argument("--strict", action="store_true",
                    help="treat boundary contamination as an error")
    ap.add_argument("--quick", action="store_true", help="selftest: fast subset only")
    ap.add_argument("--paper-figure", metavar="N", help="preset for figure N; see README")
    ap.add_argument("--version", action="version", version=f"lzslab {__version__}")
    return ap


def resolve_config(args) -> RunConfig:
    overrides = _parse_set(args.set)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = RunConfig.from_json(text, args.config)
        if overrides:
            cfg.parameters = validate(cfg.command, {**cfg.parameters, **overrides})
        return cfg
    if args.target is not None and args.command != "emit-config":
        raise ConfigError(f"unexpected argument {args.target!r}")
    command = args.target if args.command == "emit-config" else args.command
    preset = {}
    if args.paper_figure is not None:
        key = str(args.paper_figure).lower()
        if key not in PAPER_FIGURES:
            raise ConfigError(f"no preset for figure {args.paper_figure!r}; "
                              f"known: {', '.join(PAPER_FIGURES)}")
        fig_cmd, preset = PAPER_FIGURES[key]
        if command is not None and command != fig_cmd:
            raise ConfigError(f"figure {key} is produced by {fig_cmd}, not {command}")
        command = fig_cmd
    if command is None:
        raise ConfigError("no command given")
    if command == "emit-config":
        raise ConfigError("emit-config needs a target command")
    return RunConfig(command, validate(command, {**preset, **overrides}), args.out)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return 2
    try:
        cfg = resolve_config(args)
        if args.command == "emit-config":
            text = cfg.to_json()
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return 0
        if cfg.command == "selftest":
            report, results = cmd_selftest(cfg, quick=args.quick)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: residual {r.residual:.3g} "
                      f"(tol {r.tolerance:g}, {r.seconds:.2f} s)")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                (out / "selftest.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
            return 0 if report["passed"] else 1
        out = Path(cfg.output_path) if cfg.output_path and not args.out else _out_dir(args)
        if cfg.command == "waveguide":
            outputs = cmd_waveguide(cfg, args.jobs, strict=args.strict)
        else:
            outputs = HANDLERS[cfg.command](cfg, args.jobs)
        for path in _write_outputs(outputs, out):
            print(path)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LZSError, BoundaryContamination) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


HANDLERS = {
    "lz-populations": cmd_lz_populations,
    "bloch-populations": cmd_bloch_populations,
    "band-structure": cmd_band_structure,
    "lzs-sweep": cmd_lzs_sweep,
}


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
