"""Command-line front end.

Usage: ``python3 -m nonint COMMAND [options]`` with COMMAND one of
``sub, hom, resonances, limit, persist, scan, verdict``.  Options may also
come from an INI file (``--config FILE``) whose sections ``[system]``,
``[analysis]`` and ``[output]`` hold the same keys as the long options
(dashes written as underscores); flags given on the command line win.

Exit status: 0 success, 1 internal or I/O failure, 2 domain or
no-resonance error, 64 usage error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import catalog_report, report_json
from .errors import DomainError
from .melnikov import (
    MelnikovCurve,
    ResonancePair,
    chaos_threshold,
    closed_form_curve,
    distinct_fixed_points,
    homoclinic_melnikov,
    melnikov_limit_check,
    persistence_check,
    simple_zero_scan,
    solve_resonance,
    subharmonic_melnikov,
)
from .systems import ForcedPlanarSystem, catalog_get, orbit_family

EXIT_OK, EXIT_INTERNAL, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2, 64
COMMANDS = ("sub", "hom", "resonances", "limit", "persist", "scan", "verdict")
DEFAULT_SEED = 20240601

# key: (type, default, config section)
KNOBS = {
    "system": (str, "duffing", "system"),
    "a": (int, 1, "system"),
    "beta": (float, 1.0, "system"),
    "delta": (float, 0.0, "system"),
    "nu": (float, 1.0, "system"),
    "ell": (int, 2, "system"),
    "omega": (str, "1,1", "system"),
    "coupling": (str, "1,1:1", "system"),
    "M": (float, None, "system"),
    "decay": (float, None, "system"),
    "r_sys": (int, 12, "system"),
    "family": (str, "interior", "analysis"),
    "sign": (int, 1, "analysis"),
    "l": (str, "1", "analysis"),
    "n": (int, 1, "analysis"),
    "nu_from_k": (float, None, "analysis"),
    "l_list": (str, "1,2,3,5,8", "analysis"),
    "eps": (str, "1e-3", "analysis"),
    "grid": (int, 64, "analysis"),
    "tail_tol": (float, 1e-12, "analysis"),
    "hyperbolic": (str, "csch", "analysis"),
    "denom_bound": (int, 8, "analysis"),
    "scan_width": (float, 0.05, "analysis"),
    "scan_points": (int, 11, "analysis"),
    "method": (str, "closed_form", "analysis"),
    "report": (str, "all", "analysis"),
    "out": (str, None, "output"),
    "format": (str, "csv", "output"),
    "seed": (int, DEFAULT_SEED, "output"),
    "tol": (float, None, "output"),
}
CHOICES = {
    "system": ("duffing", "pendulum", "pendulum_torque", "coupled_oscillators"),
    "a": (1, -1),
    "sign": (1, -1),
    "family": ("interior", "interior_plus", "interior_minus", "exterior", "soft"),
    "hyperbolic": ("csch", "sech"),
    "method": ("closed_form", "quadrature"),
    "report": ("all", "first_integrals", "nonintegrable"),
    "format": ("csv", "json"),
}


HELP = {
    "system": "catalog system",
    "a": "Duffing cubic sign",
    "beta": "forcing amplitude",
    "delta": "damping",
    "nu": "forcing frequency",
    "ell": "number of coupled oscillators",
    "omega": "comma-separated natural frequencies",
    "coupling": "coupling harmonics as k1,k2:value, entries separated by ';'",
    "M": "bound on coupling coefficients",
    "decay": "decay rate of coupling coefficients",
    "r_sys": "Fourier truncation order for catalog systems",
    "family": "Duffing orbit family",
    "sign": "homoclinic branch",
    "l": "orbit periods in the resonance (comma list allowed)",
    "n": "forcing periods in the resonance",
    "nu_from_k": "pick nu so the orbit with this modulus is resonant",
    "l_list": "forcing-period sequence for the limit check",
    "eps": "comma-separated perturbation sizes for persist",
    "grid": "phase grid size (at least 16)",
    "tail_tol": "truncation tolerance for infinite integrals",
    "hyperbolic": "kernel of the homoclinic closed form",
    "denom_bound": "largest resonance order listed",
    "scan_width": "relative width of the damping scan around the threshold",
    "scan_points": "number of damping values in the scan",
    "method": "curve used by scan",
    "report": "which verdicts to print",
    "out": "directory for output files (stdout when absent)",
    "format": "output format",
    "seed": "seed recorded in output metadata",
    "tol": "override for the zero and constancy tests",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nonint", description="Melnikov and resonant-integral obstructions to integrability.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI file with [system], [analysis], [output] sections")
    for key, (typ, default, section) in KNOBS.items():
        flag = "--" + key.replace("_", "-")
        text = HELP.get(key, "")
        text += f" [{section}; default {default}]" if default is not None else f" [{section}]"
        p.add_argument(flag, dest=key, type=typ, default=None, help=text.strip())
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = {k: default for k, (_, default, _) in KNOBS.items()}
    if args.config:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            with open(args.config, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        for section in parser.sections():
            if section not in ("system", "analysis", "output"):
                raise UsageError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in KNOBS or KNOBS[key][2] != section:
                    raise UsageError(f"unknown config key {key!r} in [{section}]")
                try:
                    cfg[key] = KNOBS[key][0](raw)
                except ValueError as exc:
                    raise UsageError(f"bad value for {key}: {raw!r}") from exc
    for key in KNOBS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    for key, allowed in CHOICES.items():
        if cfg[key] not in allowed:
            raise UsageError(f"{key} must be one of {', '.join(map(str, allowed))}")
    if cfg["grid"] < 16:
        raise UsageError("grid must be at least 16")
    if cfg["scan_points"] < 2:
        raise UsageError("scan_points must be at least 2")
    if cfg["tol"] is not None and not cfg["tol"] > 0:
        raise UsageError("tol must be positive")
    cfg["command"] = args.command
    if args.command == "limit" and args.l is not None:
        # ``limit --l 1,2,3`` names the list of forcing-period counts.
        cfg["l_list"], cfg["l"] = args.l, KNOBS["l"][1]
    _int_list(cfg["l_list"])
    try:
        int(cfg["l"])
    except ValueError as exc:
        raise UsageError(f"l must be an integer, got {cfg['l']!r}") from exc
    return cfg


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated number list, got {text!r}") from exc


def _coupling(text: str) -> dict:
    """``"k1,k2:a;k1,k2:a"`` to ``{(k1, k2): a}``."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(";"))):
        try:
            key, value = item.split(":")
            k1, k2 = (int(v) for v in key.split(","))
            out[(k1, k2)] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad coupling entry {item!r}; expected k1,k2:a") from exc
    return out


def _family_kind(cfg) -> str:
    fam = cfg["family"]
    if fam == "interior":
        return "duffing_interior_plus" if cfg["sign"] > 0 else "duffing_interior_minus"
    return "duffing_" + fam


def _duffing(cfg, nu=None) -> ForcedPlanarSystem:
    if cfg["system"] != "duffing":
        raise UsageError(f"command {cfg['command']} needs --system duffing")
    return catalog_get("duffing", a=cfg["a"], beta=cfg["beta"], delta=cfg["delta"],
                       nu=cfg["nu"] if nu is None else nu)


def _resonant_setup(cfg):
    """System, family, modulus and resonance for the sub and persist commands."""
    res = ResonancePair(int(cfg["l"]), cfg["n"])
    kind = _family_kind(cfg)
    probe = _duffing(cfg)
    fam = orbit_family(probe, kind)
    if cfg["nu_from_k"] is not None:
        k0 = cfg["nu_from_k"]
        if not fam.contains(k0):
            raise DomainError(f"k={k0} outside the {fam.kind} range {fam.k_range}")
        nu = 2.0 * math.pi * res.n / (res.l * fam.period(k0))
    else:
        nu = cfg["nu"]
    system = _duffing(cfg, nu)
    k = solve_resonance(fam.kind, nu, res)
    return system, fam, k, res


# -- output -------------------------------------------------------------------------


def _meta_lines(meta: dict) -> list[str]:
    lines = []
    for key in sorted(meta):
        value = meta[key]
        text = json.dumps(value, sort_keys=True) if isinstance(value, (list, dict)) else _scalar(value)
        lines.append(f"# {key}={text}")
    return lines


def _scalar(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_table(columns: list[str], rows, meta: dict, fmt: str, extra_json: dict | None = None) -> str:
    """Render a table as CSV (``#`` metadata, header, LF) or JSON."""
    if fmt == "json":
        doc = {"meta": meta, "columns": {c: [_jsonable(r[i]) for r in rows] for i, c in enumerate(columns)}}
        if extra_json:
            doc.update(extra_json)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for line in _meta_lines(meta):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def curve_text(curve: MelnikovCurve, fmt: str = "csv", meta: dict | None = None) -> str:
    meta = {**_plain(curve.meta), **(meta or {})}
    if fmt == "json":
        doc = {"meta": meta, "phi": [float(v) for v in curve.phi], "values": [float(v) for v in curve.values]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    rows = list(zip(curve.phi.tolist(), curve.values.tolist()))
    return write_table(["phi", "M"], rows, meta, "csv")


def emit_curve(curve: MelnikovCurve, path, fmt: str = "csv", meta: dict | None = None) -> Path:
    """Write ``curve`` to ``path`` as CSV or JSON (schema ``{meta, phi, values}``)."""
    path = Path(path)
    path.write_text(curve_text(curve, fmt, meta), encoding="utf-8", newline="\n")
    return path


def _plain(meta: dict) -> dict:
    return {k: _jsonable(v) for k, v in meta.items()}


# -- commands ---------------------------------------------------------------------------


def _config_meta(cfg: dict) -> dict:
    return {f"config.{k}": v for k, v in sorted(cfg.items()) if v is not None}


def cmd_sub(cfg):
    system, fam, k, res = _resonant_setup(cfg)
    quad = subharmonic_melnikov(system, fam, k, res, cfg["grid"])
    closed = closed_form_curve(fam.case, fam.sign, k, res, system.delta, system.beta, system.nu, cfg["grid"])
    diff = np.abs(quad.values - closed.values)
    tol = cfg["tol"] or 1e-6
    meta = {**_config_meta(cfg), "nu": system.nu, "k": k.k, "kprime": k.kprime, "family": fam.kind,
            "max_abs_diff": float(diff.max()), "agree": bool(diff.max() < tol)}
    rows = list(zip(quad.phi.tolist(), quad.values.tolist(), closed.values.tolist(), diff.tolist()))
    return "sub", ["phi", "M_quadrature", "M_closed_form", "abs_diff"], rows, meta


def cmd_hom(cfg):
    system = _duffing(cfg)
    quad = homoclinic_melnikov(system, cfg["sign"], cfg["grid"], cfg["tail_tol"])
    closed = closed_form_curve("homoclinic", cfg["sign"], None, None, system.delta, system.beta, system.nu,
                               cfg["grid"], cfg["hyperbolic"])
    diff = np.abs(quad.values - closed.values)
    tol = cfg["tol"] or 1e-6
    meta = {**_config_meta(cfg), "t_star": quad.meta["t_star"], "max_abs_diff": float(diff.max()),
            "agree": bool(diff.max() < tol)}
    rows = list(zip(quad.phi.tolist(), quad.values.tolist(), closed.values.tolist(), diff.tolist()))
    return "hom", ["phi", "M_quadrature", "M_closed_form", "abs_diff"], rows, meta


def cmd_resonances(cfg):
    system = _duffing(cfg)
    fam = orbit_family(system, _family_kind(cfg))
    rows = []
    bound = cfg["denom_bound"]
    for l in range(1, bound + 1):
        for n in range(1, bound + 1):
            if math.gcd(l, n) != 1:
                continue
            try:
                k = solve_resonance(fam.kind, system.nu, ResonancePair(l, n))
            except DomainError:
                continue
            rows.append((l, n, k.k, k.kprime, fam.period(k)))
    meta = {**_config_meta(cfg), "family": fam.kind, "count": len(rows)}
    return "resonances", ["l", "n", "k", "kprime", "period"], rows, meta


def cmd_limit(cfg):
    system = _duffing(cfg)
    kind = _family_kind(cfg)
    if "interior" not in kind:
        raise DomainError("the limit check runs along an interior family")
    check = melnikov_limit_check(system, None, _int_list(cfg["l_list"]), cfg["grid"], kind)
    rows = [(m, k.k, k.kprime, d) for m, k, d in zip(check.forcing_periods, check.moduli, check.sup_differences)]
    sd = check.sup_differences
    meta = {**_config_meta(cfg), "monotone": check.monotone,
            "final_below_quarter_of_first": bool(len(sd) >= 2 and sd[-1] < sd[0] / 4.0)}
    return "limit", ["forcing_periods", "k", "kprime", "sup_diff"], rows, meta


def cmd_persist(cfg):
    system, fam, k, res = _resonant_setup(cfg)
    tol = cfg["tol"] or 1e-9
    rows, counts = [], {}
    for eps in _float_list(cfg["eps"]):
        found = persistence_check(system, fam.kind, res, eps, k=k, phi_grid_size=cfg["grid"], tol=tol)
        counts[f"distinct_fixed_points[{eps:g}]"] = distinct_fixed_points(found)
        counts[f"simple_zeros[{eps:g}]"] = len(found)
        for o in found:
            x1, x2 = o.shooting.point
            rows.append((eps, o.zero.phi, o.shooting.converged, o.shooting.residual, o.shooting.iterations,
                         float(x1), float(x2), o.orbit_phase, o.phase_error))
    meta = {**_config_meta(cfg), "nu": system.nu, "k": k.k, "kprime": k.kprime, **counts}
    cols = ["eps", "zero_phi", "converged", "residual", "iterations", "x1", "x2", "orbit_phase", "phase_error"]
    return "persist", cols, rows, meta


def cmd_scan(cfg):
    system = _duffing(cfg)
    if system.a != 1:
        raise DomainError("the chaos-threshold scan needs a = 1")
    thr = chaos_threshold(system.nu, cfg["hyperbolic"])
    w = cfg["scan_width"]
    ratios = np.linspace(thr * (1 - w), thr * (1 + w), cfg["scan_points"])
    beta = system.beta if system.beta > 0 else 1.0
    rows = []
    for r in ratios:
        delta = float(r * beta)
        if cfg["method"] == "quadrature":
            curve = homoclinic_melnikov(ForcedPlanarSystem(1, system.nu, beta, delta), cfg["sign"], cfg["grid"],
                                        cfg["tail_tol"])
        else:
            curve = closed_form_curve("homoclinic", cfg["sign"], None, None, delta, beta, system.nu, cfg["grid"],
                                      cfg["hyperbolic"])
        zeros = simple_zero_scan(curve)
        simple = sum(z.is_simple for z in zeros)
        rows.append((float(r), simple, len(zeros) - simple))
    meta = {**_config_meta(cfg), "threshold": thr}
    return "scan", ["delta_over_beta", "simple_zeros", "nonsimple_zeros"], rows, meta


def _verdict_params(cfg) -> tuple[str, dict]:
    name = cfg["system"]
    if name in ("pendulum", "pendulum_torque"):
        return "pendulum_torque", {"beta": cfg["beta"]}
    if name == "coupled_oscillators":
        params = {"ell": cfg["ell"], "delta": cfg["delta"], "Omega": _float_list(cfg["omega"]),
                  "coupling": _coupling(cfg["coupling"]), "R_sys": cfg["r_sys"]}
        if cfg["M"] is not None:
            params["M"] = cfg["M"]
        if cfg["decay"] is not None:
            params["decay"] = cfg["decay"]
        return name, params
    return "duffing", {"a": cfg["a"], "beta": cfg["beta"], "delta": cfg["delta"], "nu": cfg["nu"]}


def cmd_verdict(cfg):
    name, params = _verdict_params(cfg)
    report = None if cfg["report"] == "all" else cfg["report"]
    doc = catalog_report(name, params, report)
    return "verdict", doc


HANDLERS = {
    "sub": cmd_sub, "hom": cmd_hom, "resonances": cmd_resonances, "limit": cmd_limit,
    "persist": cmd_persist, "scan": cmd_scan, "verdict": cmd_verdict,
}


def run(cfg: dict, stdout=None) -> int:
    """Execute a resolved configuration; returns the exit status."""
    stdout = stdout or sys.stdout
    result = HANDLERS[cfg["command"]](cfg)
    if cfg["command"] == "verdict":
        stem, doc = result
        text = report_json(doc)
        suffix = "json"
    else:
        stem, columns, rows, meta = result
        text = write_table(columns, rows, meta, cfg["format"])
        suffix = cfg["format"]
    if cfg["out"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.{suffix}").write_text(text, encoding="utf-8", newline="\n")
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit status
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
