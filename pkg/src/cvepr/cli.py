"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments, 1 numerical failure (with a JSON
error object on stderr).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import math
import sys

import numpy as np

from . import chsh_lab as chsh
from .fock_oracle import OracleError, expand_ket, parity_expectation_oracle
from .gaussian_core import (
    SQRT2,
    Regime,
    Regulator,
    amplitudes_from_quadratures,
    epr_ket,
    nopa2_ket,
    nopa3_ket,
)
from .wigner_engine import (
    SingularIntegralError,
    parity_of,
    wigner_displaced_parity,
    wigner_epr3_closed,
    wigner_nopa2_closed,
    wigner_nopa3_closed,
)

COMMANDS = ("state-info", "wigner-eval", "wigner-grid", "chsh-scan", "chsh-max", "oracle-compare")


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: values must be finite")
    return vals


def _parse_eta(text: str | None, modes: int):
    if text is None:
        return None
    out = []
    for item in text.split(","):
        re_, _, im = item.partition(":")
        try:
            out.append(complex(float(re_), float(im or 0.0)))
        except ValueError:
            raise UsageError(f"--eta: bad entry {item!r}; use re:im pairs") from None
    if len(out) != modes:
        raise UsageError(f"--eta: got {len(out)} entries for {modes} modes")
    return out


def _build_state(args, need_eta_ok=True):
    """Return ``(spec, family, param)`` from --modes/--s/--r/--eta."""
    modes = args.modes
    if (args.s is None) == (args.r is None):
        raise UsageError("give exactly one of --s (EPR-type ket) or --r (NOPA ket)")
    if args.s is not None:
        if not args.s > 1:
            raise UsageError(f"--s must exceed 1, got {args.s}")
        if modes == 3 and Regulator(args.s).classification(3) is Regime.SINGULAR:
            raise UsageError(f"--s {args.s} is the singular regulator sqrt(2) for 3 modes")
        eta = _parse_eta(args.eta, modes)
        return epr_ket(modes, args.s, eta), "epr", args.s
    if not args.r >= 0:
        raise UsageError(f"--r must be >= 0, got {args.r}")
    if args.eta is not None:
        raise UsageError("--eta only applies to EPR-type kets")
    return (nopa2_ket(args.r) if modes == 2 else nopa3_ket(args.r)), "nopa", args.r


def _point(args, modes: int) -> np.ndarray:
    xp = _parse_floats(args.point, "--point") if args.point else [0.0] * (2 * modes)
    if len(xp) != 2 * modes:
        raise UsageError(f"--point needs {2 * modes} values (x1,p1,...), got {len(xp)}")
    return np.asarray(xp)


def _wigner(spec, family, param, amps, route):
    if route == "engine" or (family == "epr" and spec.modes == 2) or np.any(spec.drive != 0):
        return wigner_displaced_parity(spec, amps)
    if family == "epr":
        return wigner_epr3_closed(param, amps)
    return wigner_nopa3_closed(param, amps) if spec.modes == 3 else wigner_nopa2_closed(param, amps)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise UsageError(f"--out: cannot write {path!r}: {exc.strerror}") from None


def cmd_state_info(args, out):
    spec, _, _ = _build_state(args)
    d = spec.to_dict()
    d["coupling_spectral_norm"] = spec.coupling_spectral_norm()
    if spec.regime is Regime.FORMAL:
        d["formal_norm_squared"] = spec.formal_norm_squared()
    json.dump(d, out, indent=2)
    out.write("\n")


def cmd_wigner_eval(args, out):
    spec, family, param = _build_state(args)
    xp = _point(args, spec.modes)
    w = _wigner(spec, family, param, amplitudes_from_quadratures(xp), args.route)
    if args.format == "csv":
        _grid_writer(out, [(family, param, xp, w)])
        return
    json.dump(
        {
            "W": w.w,
            "parity": parity_of(w, spec.modes),
            "log_W": w.log_w,
            "clipped": w.clipped,
            "regime": w.regime.value,
        },
        out,
        indent=2,
    )
    out.write("\n")


def _grid_writer(out, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["s", "r", "x1", "p1", "x2", "p2", "x3", "p3", "W", "regime"])
    for family, param, xp, val in rows:
        coords = [_fmt(v) for v in xp] + [""] * (6 - len(xp))
        s_col = _fmt(param) if family == "epr" else ""
        r_col = _fmt(param) if family == "nopa" else ""
        w.writerow([s_col, r_col, *coords, _fmt(val.w), val.regime.value])


def cmd_wigner_grid(args, out):
    spec, family, param = _build_state(args)
    base = _point(args, spec.modes)
    names = [f"{q}{j + 1}" for j in range(spec.modes) for q in ("x", "p")]
    axes = [a.strip() for a in args.axes.split(",")]
    if len(axes) != 2 or any(a not in names for a in axes) or axes[0] == axes[1]:
        raise UsageError(f"--axes needs two distinct names from {names}")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    i0, i1 = names.index(axes[0]), names.index(axes[1])
    ticks = np.linspace(-args.extent, args.extent, args.steps)
    rows = []
    for u in ticks:
        for v in ticks:
            xp = base.copy()
            xp[i0], xp[i1] = u, v
            rows.append((family, param, xp, _wigner(spec, family, param, amplitudes_from_quadratures(xp), args.route)))
    _grid_writer(out, rows)


def _branch(args) -> chsh.Branch:
    if args.branch is None:
        raise UsageError("--branch is required unless --figure is given")
    return chsh.Branch(args.branch)


def _check_s_range(branch, s_min, s_max):
    if s_min is None or s_max is None:
        raise UsageError("--s-min and --s-max are required")
    if not (1 < s_min <= s_max):
        raise UsageError(f"need 1 < s-min <= s-max, got [{s_min}, {s_max}]")
    for s0 in chsh.SINGULAR_S[branch]:
        if s_min - 1e-6 < s0 < s_max + 1e-6:
            name = "sqrt(2)" if s0 == SQRT2 else f"{s0:g}"
            raise UsageError(f"s-range [{s_min}, {s_max}] touches the singular regulator {name} for branch {branch.value}")


def cmd_chsh_scan(args, out):
    if args.figure is not None:
        surface = chsh.figure_surface(args.figure)
    else:
        branch = _branch(args)
        if branch is chsh.Branch.GENERAL:
            raise UsageError("the general branch cannot be scanned; use chsh-max")
        _check_s_range(branch, args.s_min, args.s_max)
        if args.steps < 2:
            raise UsageError("--steps must be >= 2")
        if not 0 <= args.j_min <= args.j_max:
            raise UsageError("need 0 <= j-min <= j-max")
        surface = chsh.scan_surface(
            branch,
            np.linspace(args.s_min, args.s_max, args.steps),
            np.linspace(args.j_min, args.j_max, args.steps),
        )
    if args.format == "json":
        i, j = surface.argmax()
        json.dump(
            {"branch": surface.branch, "max": surface.max(), "argmax": [float(surface.s[i]), float(surface.J[j])]},
            out,
            indent=2,
        )
        out.write("\n")
    else:
        surface.to_csv(out)


def cmd_chsh_max(args, out):
    branch = _branch(args)
    _check_s_range(branch, args.s_min, args.s_max)
    if not 0 <= args.j_min <= args.j_max:
        raise UsageError("need 0 <= j-min <= j-max")
    grid = args.steps if args.steps is not None else 41
    if branch is chsh.Branch.GENERAL:
        a = args.amp_max
        domain = [(args.s_min, args.s_max)] + [(-a, a)] * 6
        seeds = []
        for pattern in (chsh.Branch.REAL_PAIR, chsh.Branch.IMAGINARY):
            try:
                res = chsh.maximize_bell(pattern, [(args.s_min, args.s_max), (args.j_min, args.j_max)], grid=grid)
            except ValueError:
                continue
            amps = chsh.pattern_amplitudes(pattern, res.argmax[1])
            comps = np.clip(np.ravel(np.column_stack([amps.real, amps.imag])), -a, a)
            seeds.append([res.argmax[0], *comps])
        result = chsh.maximize_bell(branch, domain, grid=min(grid, 3), seeds=seeds)
    else:
        result = chsh.maximize_bell(branch, [(args.s_min, args.s_max), (args.j_min, args.j_max)], grid=grid)
    json.dump(result.report(), out, indent=2)
    out.write("\n")


def cmd_oracle_compare(args, out):
    spec, family, param = _build_state(args)
    if np.any(spec.drive != 0):
        raise UsageError("oracle-compare supports eta = 0 only")
    if args.point:
        points = [_point(args, spec.modes)]
    else:
        rng = np.random.default_rng(args.seed)
        points = [rng.uniform(-args.amp_max, args.amp_max, 2 * spec.modes) for _ in range(args.samples)]
    tensor = expand_ket(spec, args.cutoff)
    rows = []
    for xp in points:
        amps = amplitudes_from_quadratures(xp)
        closed = parity_of(_wigner(spec, family, param, amps, "closed"), spec.modes)
        oracle, tail = parity_expectation_oracle(spec, amps, args.cutoff, tensor=tensor)
        rows.append({"point": list(map(float, xp)), "closed": closed, "oracle": oracle, "abs_diff": abs(closed - oracle)})
    json.dump(
        {
            "family": family,
            "modes": spec.modes,
            "param": param,
            "cutoff": args.cutoff,
            "tail_estimate": tensor.tail_estimate,
            "max_abs_diff": max(r["abs_diff"] for r in rows),
            "points": rows,
        },
        out,
        indent=2,
    )
    out.write("\n")


HANDLERS = {
    "state-info": cmd_state_info,
    "wigner-eval": cmd_wigner_eval,
    "wigner-grid": cmd_wigner_grid,
    "chsh-scan": cmd_chsh_scan,
    "chsh-max": cmd_chsh_max,
    "oracle-compare": cmd_oracle_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvepr", description="Regularised EPR-type states, Wigner functions, CHSH values")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def state_flags(sp, modes_default=3):
        sp.add_argument("--modes", type=int, choices=(2, 3), default=modes_default)
        sp.add_argument("--s", type=float, help="regulator of the EPR-type ket")
        sp.add_argument("--r", type=float, help="squeezing of the NOPA ket")
        sp.add_argument("--eta", help="comma-separated re:im drive pairs, one per mode")

    def common(sp, fmt="json"):
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.add_argument("--out", help="output path (default stdout)")

    sp = sub.add_parser("state-info", help="coefficients, norm and regime of a ket")
    state_flags(sp)
    common(sp)

    sp = sub.add_parser("wigner-eval", help="Wigner function at one phase-space point")
    state_flags(sp)
    sp.add_argument("--point", help="x1,p1,x2,p2[,x3,p3]")
    sp.add_argument("--route", choices=("closed", "engine"), default="closed")
    common(sp)

    sp = sub.add_parser("wigner-grid", help="Wigner function on a 2-D slice, CSV")
    state_flags(sp)
    sp.add_argument("--point", help="base point x1,p1,...; the two scanned coordinates are overwritten")
    sp.add_argument("--axes", default="x1,p1")
    sp.add_argument("--extent", type=float, default=3.0)
    sp.add_argument("--steps", type=int, default=41)
    sp.add_argument("--route", choices=("closed", "engine"), default="closed")
    common(sp, "csv")

    branches = [b.value for b in chsh.Branch]
    sp = sub.add_parser("chsh-scan", help="B values on an (s, J) grid, CSV")
    sp.add_argument("--figure", type=int, choices=(1, 2, 3, 4))
    sp.add_argument("--branch", choices=branches)
    sp.add_argument("--s-min", type=float)
    sp.add_argument("--s-max", type=float)
    sp.add_argument("--j-min", type=float, default=0.0)
    sp.add_argument("--j-max", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=200)
    common(sp, "csv")

    sp = sub.add_parser("chsh-max", help="maximise a Bell combination, JSON report")
    sp.add_argument("--branch", choices=branches, required=True)
    sp.add_argument("--s-min", type=float, required=True)
    sp.add_argument("--s-max", type=float, required=True)
    sp.add_argument("--j-min", type=float, default=0.0)
    sp.add_argument("--j-max", type=float, default=1.0)
    sp.add_argument("--steps", type=int, help="grid points per axis before refinement")
    sp.add_argument("--amp-max", type=float, default=0.05, help="box half-width for general displacements")
    common(sp)

    sp = sub.add_parser("oracle-compare", help="closed-form parity vs number-basis oracle")
    state_flags(sp)
    sp.add_argument("--cutoff", type=int, default=25)
    sp.add_argument("--point", help="x1,p1,...; default: random points")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--amp-max", type=float, default=0.8, help="half-width of random quadratures")
    common(sp)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = None
    close = False
    try:
        if args.format == "csv" and args.command in ("state-info", "chsh-max", "oracle-compare"):
            raise UsageError(f"{args.command} only writes JSON")
        out, close = _open_out(args.out)
        buf = io.StringIO()
        HANDLERS[args.command](args, buf)
        try:
            out.write(buf.getvalue())
            out.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); not an error
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (SingularIntegralError, OracleError, ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc), "command": args.command}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    finally:
        if close:
            out.close()


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
