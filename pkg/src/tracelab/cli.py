"""Batch front end: identity suites, FEM checks and constant sweeps.

Configuration comes from flat ``key = value`` text plus command-line flags
(flags win). All tables are CSV with a mandatory header, 17 significant
digits and LF endings; rerunning a fixed config must reproduce them byte
for byte. Timestamps appear only in the summary header line.

Exit status: 0 all checks passed, 1 some check failed (files are still
written), 2 configuration error.
"""

import argparse
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import fem
from .errors import ConfigError, TraceLabError
from .identities import (
    check_decomposition,
    check_permutation,
    check_resolvent_identities,
    check_tb_adjoint,
    check_tb_pinv,
    random_operator,
)
from .inequalities import CONSTANTS_COLUMNS, InequalityLab, row_record
from .operators import op_norm

COMMANDS = ("verify-identities", "fem-check", "constants", "report")
MODES = ("graph", "surrogate", "both")
IDENTITY_COLUMNS = ("name", "context", "residual", "tolerance", "pass")
VIOLATION_TOL = 1e-9
SCAN_DEFAULT = tuple(round(0.1 * k, 1) for k in range(11))


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = 0
    dims: tuple = ((8, 6),)
    trials: int = 5
    domain: str = "square"
    refine: int = 1
    s_values: tuple = ()
    output_path: str = ""
    mode: str = "both"


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

def _parse_dims(text, where):
    dims = []
    for part in str(text).split(","):
        bits = part.lower().split("x")
        if len(bits) != 2 or not all(b.strip().isdigit() for b in bits):
            raise ConfigError(f"{where}: dims entry {part!r} is not like 8x6")
        dims.append((int(bits[0]), int(bits[1])))
    return tuple(dims)


def _parse_s(text, where):
    try:
        return tuple(float(part) for part in str(text).split(","))
    except ValueError:
        raise ConfigError(f"{where}: s list {text!r} is not comma-separated reals") from None


def _parse_int(text, where, key):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key} wants an integer, got {text!r}") from None


_CONVERTERS = {
    "command": lambda v, w: str(v),
    "seed": lambda v, w: _parse_int(v, w, "seed"),
    "dims": lambda v, w: v if isinstance(v, tuple) else _parse_dims(v, w),
    "trials": lambda v, w: _parse_int(v, w, "trials"),
    "domain": lambda v, w: str(v),
    "refine": lambda v, w: _parse_int(v, w, "refine"),
    "s": lambda v, w: v if isinstance(v, tuple) else _parse_s(v, w),
    "out": lambda v, w: str(v),
    "mode": lambda v, w: str(v),
}
_FIELD_FOR_KEY = {"s": "s_values", "out": "output_path"}


def _validate(config):
    where = "config"
    if config.command not in COMMANDS:
        raise ConfigError(f"{where}: unknown command {config.command!r}")
    if config.trials < 1:
        raise ConfigError(f"{where}: trials must be >= 1, got {config.trials}")
    if config.refine < 0:
        raise ConfigError(f"{where}: refine must be >= 0, got {config.refine}")
    if config.mode not in MODES:
        raise ConfigError(f"{where}: mode must be one of {MODES}, got {config.mode!r}")
    for d, c in config.dims:
        if d < 1 or c < 1:
            raise ConfigError(f"{where}: dims must be positive, got {d}x{c}")
    if config.command == "constants":
        for s in config.s_values:
            if not 0.0 <= s <= 1.0:
                raise ConfigError(f"{where}: constants takes s in [0, 1], got {s:g}")
    return config


def parse_config(text, overrides=None):
    """Flat key = value lines merged with flag overrides; unknown keys fail."""
    data = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        data[key] = _CONVERTERS[key](value, f"line {lineno}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"flag --{key}: unknown")
        data[key] = _CONVERTERS[key](value, f"flag --{key}")
    if "command" not in data:
        raise ConfigError("no command given")
    fields = {_FIELD_FOR_KEY.get(k, k): v for k, v in data.items()}
    return _validate(RunConfig(**fields))


def emit_config(config):
    """Config as key = value text; parse_config(emit_config(c)) == c."""
    lines = [
        f"command = {config.command}",
        f"seed = {config.seed}",
        "dims = " + ",".join(f"{d}x{c}" for d, c in config.dims),
        f"trials = {config.trials}",
        f"domain = {config.domain}",
        f"refine = {config.refine}",
        f"mode = {config.mode}",
    ]
    if config.s_values:
        lines.append("s = " + ",".join(f"{s:.17g}" for s in config.s_values))
    if config.output_path:
        lines.append(f"out = {config.output_path}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _out_dir(config):
    path = config.output_path or os.environ.get("TRACELAB_OUT_DIR", ".")
    os.makedirs(path, exist_ok=True)
    return path


def _write_lines(path, lines):
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _report_record(report):
    return (report.name, report.context, f"{report.residual:.17g}",
            f"{report.tolerance:.17g}", "true" if report.passed else "false")


def _write_identities(out, reports):
    rows = [",".join(IDENTITY_COLUMNS)]
    rows += [",".join(_report_record(r)) for r in reports]
    _write_lines(os.path.join(out, "identities.csv"), rows)


def _write_constants(out, rows):
    lines = [",".join(CONSTANTS_COLUMNS)]
    lines += [",".join(row_record(r)) for r in rows]
    _write_lines(os.path.join(out, "constants.csv"), lines)


def _summary_header(command):
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"# tracelab {command} {stamp}"


def _identity_summary(reports):
    worst = {}
    for r in reports:
        if r.name not in worst or r.residual > worst[r.name]:
            worst[r.name] = r.residual
    failed = sum(not r.passed for r in reports)
    lines = [f"checks={len(reports)} failed={failed}"]
    lines += [f"worst[{name}]={value:.17g}" for name, value in sorted(worst.items())]
    return lines, failed == 0


def _constants_summary(rows):
    lines = []
    ok = True
    for row in rows:
        lines.append(
            f"{row.theorem} mode={row.mode} s={row.s:g}: "
            f"c_low={row.c_low:.17g} c_high={row.c_high:.17g} "
            f"worst_violation={row.worst_violation:.17g}")
        ok = ok and row.worst_violation <= VIOLATION_TOL
    return lines, ok


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _identity_battery(a, b, s_values, rank_rtol=None, context=""):
    reports = list(check_resolvent_identities(a, b, rank_rtol=rank_rtol, context=context))
    reports.append(check_tb_pinv(a, b, rank_rtol=rank_rtol, context=context))
    reports.append(check_decomposition(a, b, context=context))
    reports.append(check_tb_adjoint(a, b, context=context))
    if s_values:
        reports += check_permutation(a, b, s_values, rank_rtol=rank_rtol, context=context)
    return reports


def _run_verify_identities(config, out):
    reports = []
    for dim_dom, dim_cod in config.dims:
        for trial in range(config.trials):
            trial_seed = config.seed + trial
            rank = int(np.random.default_rng((config.seed, dim_dom, dim_cod, trial))
                       .integers(1, min(dim_dom, dim_cod) + 1))
            a, b = random_operator(trial_seed, dim_dom, dim_cod, rank)
            context = f"dims={dim_dom}x{dim_cod} trial={trial} rank={rank}"
            reports += _identity_battery(a, b, config.s_values, context=context)
    _write_identities(out, reports)
    lines, ok = _identity_summary(reports)
    _write_lines(os.path.join(out, "summary.txt"),
                 [_summary_header(config.command)] + lines)
    return 0 if ok else 1


def _run_fem_check(config, out):
    mats = fem.assemble(fem.build_mesh(config.domain, config.refine))
    gamma, lam = fem.trace_pair(mats)
    context = f"domain={config.domain} refine={config.refine}"
    reports = _identity_battery(gamma, lam, config.s_values,
                                rank_rtol=fem.FEM_RANK_RTOL, context=context)
    _write_identities(out, reports)
    norm = op_norm(gamma)
    system = fem.steklov(mats)
    head = ",".join(f"{v:.17g}" for v in system.lambdas[:6])
    lines, ok = _identity_summary(reports)
    ok = ok and abs(norm - 1.0) <= 1e-10
    _write_lines(os.path.join(out, "summary.txt"), [
        _summary_header(config.command),
        context,
        f"dofs={mats.K.shape[0]} boundary={mats.Mb.shape[0]}",
        f"op_norm(Gamma)={norm:.17g}",
        f"steklov_head={head}",
    ] + lines)
    return 0 if ok else 1


def _run_constants(config, out):
    lab = InequalityLab(config.domain, config.refine, seed=config.seed)
    grid = config.s_values or SCAN_DEFAULT
    modes = ("graph", "surrogate") if config.mode == "both" else (config.mode,)
    rows = []
    for mode in modes:
        for s in grid:
            rows.append(lab.trace_equivalence_constants(s, mode))
        rows += lab.interpolation_scan(grid, mode)
    rows.append(lab.bergman_sandwich())
    _write_constants(out, rows)
    lines, ok = _constants_summary(rows)
    _write_lines(os.path.join(out, "summary.txt"),
                 [_summary_header(config.command)] + lines)
    return 0 if ok else 1


def _run_report(config, out):
    """Aggregate previously written CSVs; no recomputation."""
    lines = [_summary_header(config.command)]
    ok = True
    found = False
    identities = os.path.join(out, "identities.csv")
    if os.path.exists(identities):
        found = True
        with open(identities) as handle:
            rows = [line.rstrip("\n").split(",") for line in handle][1:]
        failed = sum(row[-1] != "true" for row in rows)
        worst = max((float(row[2]) for row in rows), default=0.0)
        lines.append(f"identities: rows={len(rows)} failed={failed} worst={worst:.17g}")
        ok = ok and failed == 0
    constants = os.path.join(out, "constants.csv")
    if os.path.exists(constants):
        found = True
        with open(constants) as handle:
            rows = [line.rstrip("\n").split(",") for line in handle][1:]
        worst = max((float(row[7]) for row in rows), default=0.0)
        lines.append(f"constants: rows={len(rows)} worst_violation={worst:.17g}")
        ok = ok and worst <= VIOLATION_TOL
    if not found:
        raise ConfigError(f"report: no identities.csv or constants.csv under {out!r}")
    _write_lines(os.path.join(out, "summary.txt"), lines)
    return 0 if ok else 1


_RUNNERS = {
    "verify-identities": _run_verify_identities,
    "fem-check": _run_fem_check,
    "constants": _run_constants,
    "report": _run_report,
}


def run(config):
    """Execute a validated config; returns the process exit status."""
    _validate(config)
    out = _out_dir(config)
    try:
        return _RUNNERS[config.command](config, out)
    except ConfigError:
        raise
    except TraceLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# flag handling
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tracelab",
        description="Verify pseudoinverse identities and trace-norm constants.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    parser.add_argument("--dims", help="operator shapes AxB[,CxD...] (default 8x6)")
    parser.add_argument("--trials", type=int, help="random pairs per shape (default 5)")
    parser.add_argument("--domain", help="square | lshape | ngon:<sides> (default square)")
    parser.add_argument("--refine", type=int, help="quadrisection count (default 1)")
    parser.add_argument("--s", help="comma-separated s values (default: command-specific)")
    parser.add_argument("--mode", help="graph | surrogate | both (default both)")
    parser.add_argument("--out", help="output directory (default $TRACELAB_OUT_DIR or .)")
    parser.add_argument("--config", help="key = value config file")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            try:
                with open(args.config) as handle:
                    text = handle.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
        overrides = {"command": args.command, "seed": args.seed, "dims": args.dims,
                     "trials": args.trials, "domain": args.domain, "refine": args.refine,
                     "s": args.s, "mode": args.mode, "out": args.out}
        return run(parse_config(text, overrides))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
