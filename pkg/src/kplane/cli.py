"""Command-line front end.

``kplane <command> [flags]`` runs one verification suite, writes CSV/JSON
files (each with the measure convention and the resolved configuration in
its header) and exits with 0 when every check passes, 2 when some check
fails and 1 on usage or configuration errors.
"""

import argparse
from dataclasses import asdict, dataclass, fields, replace
import json
import math
from pathlib import Path
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import records, suites
from .errors import KPlaneError
from .extremals import ratio_curve, write_ratio_curve
from .geometry import Dims, parse_nu
from .lorentz import LorentzMap
from .quadrature import CONVENTION_ID, Quadrature
from .stability import deficit_scan, offcenter_family, radial_family, write_scan

COMMANDS = ("verify-lemma1", "verify-transfer", "verify-invariance", "verify-drury",
            "sharp-constants", "ratio-curve", "stability-scan", "decompose")
COMMAND_HELP = {
    "verify-lemma1": "chart Jacobians, bracket ratios and pullback isometries",
    "verify-transfer": "lift transfer of norms and transforms",
    "verify-invariance": "boost equivariance and invariance of the transform norm",
    "verify-drury": "multilinear identity with the pinned calibration",
    "sharp-constants": "numerical sharp constants for each curvature",
    "ratio-curve": "hyperbolic ratios of concentrating truncated extremisers",
    "stability-scan": "deficit against distance to the extremiser family",
    "decompose": "factor a Lorentz matrix into rotations and boosts",
}
MC_COMMANDS = ("verify-invariance", "verify-drury")
MAX_D = 3
NU_TAGS = {"0": "0", "+": "plus", "-": "minus"}

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    d: int = 2
    k: int = 1
    nu: str = "0"
    kind: str = ""
    order: int = 16
    levels: int = 3
    samples: int = 1_000_000
    seed: int = None
    delta: float = 0.05
    lambdas: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    regime: str = "radial"
    method: str = "polar"
    input: str = ""
    out: str = "kplane_out"
    convention_id: str = CONVENTION_ID

    def quadrature(self):
        if self.kind == "monte_carlo":
            return Quadrature(kind="monte_carlo", samples=self.samples, seed=self.seed)
        return Quadrature(order=self.order, levels=self.levels)

    def header(self):
        out = asdict(self)
        out["lambdas"] = list(self.lambdas)
        return out


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_lambdas(value):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        lams = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise UsageError(f"cannot read lambda values from {value!r}")
    if not lams or any(not math.isfinite(x) or x <= 0 for x in lams):
        raise UsageError("lambda values must be positive numbers")
    if list(lams) != sorted(lams):
        raise UsageError("lambda values must be ascending")
    return lams


def _coerce(key, value):
    if key == "lambdas":
        return _parse_lambdas(value)
    kind = FIELD_TYPES[key]
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key}: {value!r}")


def load_config_file(path):
    """Flat TOML table mirroring :class:`RunConfig`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message ends with "(at line L, column C)"
        raise UsageError(f"config parse error in {path}: {exc}")
    out = {}
    for key, value in data.items():
        key = "lambdas" if key == "lambda" else key
        if key not in FIELD_TYPES or key in ("command", "convention_id"):
            raise UsageError(f"unknown config key {key!r} in {path}")
        if isinstance(value, dict):
            raise UsageError(f"config key {key!r} must be a plain value (flat keys only)")
        out[key] = _coerce(key, value)
    return out


def resolve_config(command, file_values, flag_values):
    """File values, then flags on top; validated and with per-command defaults filled in."""
    cfg = RunConfig(command=command)
    merged = dict(file_values)
    merged.update({k: _coerce(k, v) for k, v in flag_values.items() if v is not None})
    cfg = replace(cfg, **merged)
    if cfg.d > MAX_D:
        raise UsageError(f"d = {cfg.d} is not supported (d <= {MAX_D})")
    try:
        Dims(cfg.d, cfg.k)
        cfg.nu = parse_nu(cfg.nu)
    except ValueError as exc:
        raise UsageError(str(exc))
    if not cfg.kind:
        cfg.kind = "monte_carlo" if command in MC_COMMANDS else "tensor_gauss"
    if cfg.kind == "monte_carlo" and cfg.seed is None:
        raise UsageError("monte_carlo quadrature needs an explicit seed (--seed)")
    if cfg.seed is None:
        cfg.seed = 0
    if command == "verify-drury" and cfg.kind != "monte_carlo":
        raise UsageError("verify-drury integrates by Monte Carlo (kind = monte_carlo)")
    if not 0 < cfg.delta < 1:
        raise UsageError("delta must lie in (0, 1)")
    if cfg.regime not in ("radial", "hyperplane"):
        raise UsageError(f"unknown regime {cfg.regime!r}")
    if cfg.method not in ("polar", "reflections"):
        raise UsageError(f"unknown decomposition method {cfg.method!r}")
    if command == "decompose" and not cfg.input:
        raise UsageError("decompose needs --input")
    try:
        cfg.quadrature()
    except ValueError as exc:
        raise UsageError(str(exc))
    return cfg


# ---------------------------------------------------------------------------
# commands


def _out(cfg, name):
    return Path(cfg.out) / name


def _dims_tag(cfg):
    return f"d{cfg.d}_k{cfg.k}"


def _write_rows(cfg, name, rows):
    return records.write_csv(_out(cfg, name), records.IDENTITY_COLUMNS, rows, cfg.header())


def cmd_verify_lemma1(cfg):
    rows = suites.chart_map_suite(cfg.d, cfg.k, cfg.seed, cfg.quadrature())
    return rows, [_write_rows(cfg, f"lemma1_{_dims_tag(cfg)}.csv", rows)]


def cmd_verify_transfer(cfg):
    rows = suites.transfer_suite(cfg.d, cfg.k, cfg.seed, cfg.quadrature())
    return rows, [_write_rows(cfg, f"transfer_{_dims_tag(cfg)}.csv", rows)]


def cmd_verify_invariance(cfg):
    tensor = Quadrature(order=cfg.order, levels=cfg.levels)
    rows = suites.invariance_suite(cfg.d, cfg.k, cfg.seed, cfg.quadrature(), tensor=tensor)
    return rows, [_write_rows(cfg, f"invariance_{_dims_tag(cfg)}.csv", rows)]


def cmd_verify_drury(cfg):
    rows, cals = suites.drury_suite(cfg.d, cfg.k, cfg.seed, cfg.quadrature())
    summary = {"calibrations": [{"value": c.calibration, "stderr": c.calibration_err,
                                 "lhs": c.lhs.value, "rhs": c.rhs.value} for c in cals]}
    return rows, [_write_rows(cfg, f"drury_{_dims_tag(cfg)}.csv", rows),
                  records.write_json(_out(cfg, f"drury_{_dims_tag(cfg)}.json"), summary, cfg.header())]


def cmd_sharp_constants(cfg):
    sc, rows = suites.sharp_constant_checks(cfg.d, cfg.k, cfg.quadrature())
    summary = {"A0": sc.A0, "Aplus": sc.Aplus, "Aminus": sc.Aminus, "errors": sc.errors,
               "Aminus_attained": not sc.non_attained}
    return rows, [records.write_json(_out(cfg, f"sharp_constants_{_dims_tag(cfg)}.json"), summary,
                                     cfg.header())]


def cmd_ratio_curve(cfg):
    dims = Dims(cfg.d, cfg.k)
    quad = cfg.quadrature()
    sc, _ = suites.sharp_constant_checks(cfg.d, cfg.k, quad)
    curve = ratio_curve(cfg.lambdas, dims, quad, cfg.delta, A0=sc.A0)
    rows = suites.ratio_curve_checks(curve, sc.A0)
    return rows, [write_ratio_curve(_out(cfg, f"ratio_curve_{_dims_tag(cfg)}.csv"), curve, cfg.header())]


def cmd_stability_scan(cfg):
    dims = Dims(cfg.d, cfg.k)
    if cfg.regime == "hyperplane":
        members = offcenter_family(dims) if cfg.nu == "0" else None
        if members is None:
            raise UsageError("the hyperplane regime is scanned on the flat space (nu = 0)")
    else:
        members = radial_family(cfg.nu, dims, delta=cfg.delta)
    fit = deficit_scan(members, cfg.nu, dims, cfg.quadrature(), cfg.regime, seed=cfg.seed)
    ok = math.isfinite(fit.fitted_c) and fit.fitted_c > 0
    rows = [["fitted_c", f"regime={cfg.regime};nu={cfg.nu};eligible={len(fit.eligible)}",
             fit.fitted_c, 0.0, 0.0, 0.0, bool(ok)]]
    stem = f"stability_{cfg.regime}_nu{NU_TAGS[cfg.nu]}_{_dims_tag(cfg)}"
    csv_path, json_path = _out(cfg, stem + ".csv"), _out(cfg, stem + ".json")
    write_scan(csv_path, json_path, fit, cfg.header())
    return rows, [csv_path, json_path]


def _read_matrix(path):
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"JSON parse error in {path}: {exc}")
    if isinstance(obj, dict):
        obj = obj.get("matrix")
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        M = None
    if M is None or M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
        raise UsageError(f"{path} must hold a square matrix (a list of rows or {{\"matrix\": ...}})")
    if M.shape[0] - 1 > MAX_D:
        raise UsageError(f"d = {M.shape[0] - 1} is not supported (d <= {MAX_D})")
    try:
        return LorentzMap(M).matrix
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_decompose(cfg):
    M = _read_matrix(cfg.input)
    fl, row = suites.decomposition_rows(M, cfg.method)
    cfg = replace(cfg, d=fl.d, k=min(cfg.k, fl.d - 1))
    path = _out(cfg, "factors.json")
    payload = {"d": fl.d, "factors": fl.to_json(), "reconstruction_error": row[2]}
    records.write_json(path, payload, cfg.header())
    print(fl.dumps(sort_keys=True))
    return [row], [path]


HANDLERS = {
    "verify-lemma1": cmd_verify_lemma1,
    "verify-transfer": cmd_verify_transfer,
    "verify-invariance": cmd_verify_invariance,
    "verify-drury": cmd_verify_drury,
    "sharp-constants": cmd_sharp_constants,
    "ratio-curve": cmd_ratio_curve,
    "stability-scan": cmd_stability_scan,
    "decompose": cmd_decompose,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML file with flat RunConfig keys")
    common.add_argument("--d", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--nu", help="0, + or -")
    common.add_argument("--kind", choices=("tensor_gauss", "monte_carlo"))
    common.add_argument("--order", type=int, help="Gauss order per panel")
    common.add_argument("--levels", type=int, help="grading levels toward singular endpoints")
    common.add_argument("--samples", type=int, help="Monte Carlo samples")
    common.add_argument("--seed", type=int)
    common.add_argument("--delta", type=float, help="hyperbolic truncation margin")
    common.add_argument("--lambda", dest="lambdas", help="comma-separated ascending sweep")
    common.add_argument("--regime", choices=("radial", "hyperplane"))
    common.add_argument("--method", choices=("polar", "reflections"))
    common.add_argument("--input", help="JSON Lorentz matrix (decompose)")
    common.add_argument("--out", help="output directory")
    parser = _Parser(prog="kplane", description="k-plane transform verification suites")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser


def run(argv=None):
    """Run one command; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        file_values = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_values, flags)
        rows, paths = HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"kplane: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except KPlaneError as exc:
        print(f"kplane: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    failed = suites.failures(rows)
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    if failed:
        first = failed[0]
        print(f"FAIL: {len(failed)} of {len(rows)} checks failed (first: {first[0]} {first[1]}: "
              f"lhs={records.fmt(first[2])} rhs={records.fmt(first[3])})", file=sys.stderr)
        return EXIT_FAIL
    print(f"PASS: {len(rows)} checks", file=sys.stderr)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
