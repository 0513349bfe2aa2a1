"""Command-line front end: ``conespec <subcommand> [options]``.

Operator inputs
  --matrix PATH       max-times matrix, CSV (n rows of n nonnegative numbers)
  --sum-matrix PATH   ordinary nonnegative matrix acting by sums, same format
  --kernel PATH       max-kernel config: ``key = value`` lines with keys
                      a, N, kernel, lo, hi; values are expressions in s, t
                      or ``@file.csv`` sample tables
  --shift VARIANT     backward shift, ``linf`` or ``l2-cone``

Vectors (``--vector PATH``) are one CSV row for dense domains, or
``index:value`` lines (1-based) for sparse ones.

Exit codes: 0 success (or all fixture facts pass), 1 some fixture fact
failed, 2 bad input, 3 construction failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import approx, spectral
from .cone import ConeVector, UniformGrid
from .errors import (
    ConeSpecError,
    DivergenceThresholdUnreachedError,
    HorizonExhaustedError,
    NotAPowerEigenvectorError,
    PreconditionError,
    TargetAboveRadiusError,
)
from .expr import compile_expr
from .fixtures import FIXTURES, PARAMETERS, make_fixture, verify_fixture
from .operators import MaxKernel, MaxTimesMatrix, ShiftOperator, SumMatrix, window_indices

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_CONSTRUCTION = 3

_CONSTRUCTION_ERRORS = (
    HorizonExhaustedError,
    TargetAboveRadiusError,
    DivergenceThresholdUnreachedError,
    NotAPowerEigenvectorError,
    PreconditionError,
)


class InputError(Exception):
    """Unreadable or malformed input file."""


# ---------------------------------------------------------------------------
# input parsing


def read_matrix(path: str) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as err:
        raise InputError(f"cannot read matrix {path}: {err}") from err
    if A.shape[0] != A.shape[1]:
        raise InputError(f"matrix in {path} is {A.shape[0]}x{A.shape[1]}, expected square")
    return A


def read_vector(path: str, space) -> ConeVector:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise InputError(f"cannot read vector {path}: {err}") from err
    try:
        if ":" in text:
            coords = {}
            for line in text.splitlines():
                line = line.split("#", 1)[0].strip()
                if line:
                    idx, val = line.split(":")
                    coords[int(idx)] = float(val)
            if space.is_sparse:
                return space.sparse(coords)
            arr = np.zeros(space.dim)
            for j, v in coords.items():
                arr[j - 1] = v
            return space.vector(arr)
        vals = [float(v) for v in text.replace("\n", ",").split(",") if v.strip()]
    except (ValueError, IndexError) as err:
        raise InputError(f"cannot parse vector {path}: {err}") from err
    return space.vector(vals)


def _read_table(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as err:
        raise InputError(f"cannot read table {path}: {err}") from err


def read_kernel_config(path: str) -> MaxKernel:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as err:
        raise InputError(f"cannot read kernel config {path}: {err}") from err
    cfg = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        cfg[key] = val
    missing = [k for k in ("a", "N", "kernel", "lo", "hi") if k not in cfg]
    if missing:
        raise InputError(f"kernel config {path} is missing {', '.join(missing)}")
    try:
        a = float(cfg["a"])
        N = int(cfg["N"])
    except ValueError as err:
        raise InputError(f"kernel config {path}: a and N must be numbers") from err
    grid = UniformGrid(a, N)
    s = grid.points
    base = os.path.dirname(os.path.abspath(path))

    def table(val):
        return _read_table(os.path.join(base, val[1:].strip()))

    def window(key):
        val = cfg[key]
        if val.startswith("@"):
            return table(val).reshape(-1)
        return np.broadcast_to(compile_expr(val)(s, 0.0), (N,))

    if cfg["kernel"].startswith("@"):
        samples = table(cfg["kernel"])
    else:
        S, T = np.meshgrid(s, s, indexing="ij")
        samples = np.broadcast_to(compile_expr(cfg["kernel"])(S, T), (N, N))
    if np.any(samples < 0):
        raise InputError(f"kernel in {path} is negative somewhere on the grid")
    lo_idx, hi_idx = window_indices(grid, window("lo"), window("hi"))
    return MaxKernel(grid, lo_idx, hi_idx, samples)


def build_operator(args):
    if args.matrix:
        return MaxTimesMatrix(read_matrix(args.matrix))
    if args.sum_matrix:
        return SumMatrix(read_matrix(args.sum_matrix))
    if args.kernel:
        return read_kernel_config(args.kernel)
    if args.shift:
        return ShiftOperator(args.shift)
    raise InputError("one of --matrix, --sum-matrix, --kernel, --shift is required")


def _test_set(args, op):
    if args.vector:
        return [read_vector(p, op.space) for p in args.vector]
    if isinstance(op, MaxKernel):
        return [op.space.ones()]
    return op.default_seeds()


# ---------------------------------------------------------------------------
# subcommands


def cmd_radius(args, op):
    est = spectral.bonsall_radius(op, args.horizon)
    out = {"operator": op.describe(), "radius": est.to_dict()}
    if isinstance(op, MaxTimesMatrix):
        out["radius"]["exact"] = spectral.cycle_mean_radius(op)
    return out, EXIT_OK


def cmd_local_radius(args, op):
    if not args.vector:
        raise InputError("local-radius needs --vector")
    out = {"operator": op.describe(), "local_radii": []}
    for path in args.vector:
        x = read_vector(path, op.space)
        entry = {"vector": path, "estimate": spectral.local_radius(op, x, args.horizon).to_dict()}
        if isinstance(op, MaxTimesMatrix):
            entry["exact"] = spectral.matrix_local_radius(op, x)
        out["local_radii"].append(entry)
    return out, EXIT_OK


def cmd_spectrum(args, op):
    report = spectral.ap_spectrum_report(op, _test_set(args, op), args.horizon, args.eps,
                                         approx_horizon=args.approx_horizon)
    return {"operator": op.describe(), **report.to_dict()}, EXIT_OK


def cmd_approx_eig(args, op):
    if args.t is None:
        raise InputError("approx-eig needs --t")
    seeds = [read_vector(p, op.space) for p in args.vector] if args.vector else None
    pair = approx.approx_eigenvector(op, args.t, args.eps, seeds, args.approx_horizon)
    return {"operator": op.describe(), "certificate": pair.to_dict()}, EXIT_OK


def cmd_witness(args, op):
    x, picks, norms = approx.radius_witness_details(op, args.horizon)
    vec = ([[j, v] for j, v in x.coordinates().items()] if x.space.is_sparse
           else x.values.tolist())
    return {"operator": op.describe(), "horizon": args.horizon, "witness": vec,
            "picked_seed": picks, "picked_orbit_norms": norms.tolist(),
            "local_radius": spectral.local_radius(op, x, args.horizon).to_dict()}, EXIT_OK


def _fixture_params(args):
    params = {}
    if args.k:
        params["k"] = args.k if len(args.k) > 1 else args.k[0]
    if args.N is not None:
        params["N"] = args.N
    for item in args.param or []:
        if "=" not in item:
            raise InputError(f"--param expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            params[key.strip()] = json.loads(val)
        except json.JSONDecodeError:
            params[key.strip()] = val
    return params


def cmd_verify_fixture(args):
    spec = make_fixture(args.name, _fixture_params(args))
    results = verify_fixture(spec)
    ok = all(r.passed for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {spec.name}/{r.id}: {r.description}", file=sys.stderr)
    return {"fixture": spec.name, "params": spec.params, "passed": ok,
            "facts": [r.to_dict() for r in results]}, (EXIT_OK if ok else EXIT_FAIL)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conespec", description="Cone spectral radii and approximate eigenvectors.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, horizon=60):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--matrix", help="max-times matrix CSV")
        src.add_argument("--sum-matrix", help="nonnegative matrix CSV acting by sums")
        src.add_argument("--kernel", help="max-kernel config file")
        src.add_argument("--shift", choices=["linf", "l2-cone"], help="backward shift variant")
        sp.add_argument("--horizon", type=int, default=horizon, help="power horizon H")
        sp.add_argument("--vector", action="append", help="vector file (repeatable)")
        sp.add_argument("--eps", type=float, default=1e-3)
        sp.add_argument("--approx-horizon", type=int, default=None,
                        help="orbit horizon for certificates (default from eps)")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")

    common(sub.add_parser("radius", help="Bonsall radius upper bound (exact for matrices)"))
    common(sub.add_parser("local-radius", help="local radius of --vector"))
    common(sub.add_parser("spectrum", help="radius, local radii, certified interval"))
    ae = sub.add_parser("approx-eig", help="approximate eigenvector at --t")
    common(ae)
    ae.add_argument("--t", type=float, default=None, help="target value")
    common(sub.add_parser("witness", help="vector whose local radius approaches the radius"), horizon=12)
    vf = sub.add_parser("verify-fixture", help="evaluate a fixture's expected facts")
    vf.add_argument("--name", required=True, help=f"one of: {', '.join(FIXTURES)}")
    vf.add_argument("--k", type=int, action="append", help="fixture k (repeatable)")
    vf.add_argument("--N", type=int, default=None, help="grid size")
    vf.add_argument("--param", action="append", help="extra key=value (JSON values)")
    vf.add_argument("--list", action="store_true", help="print parameter schemas and exit")
    vf.add_argument("--out", help="write the JSON report here instead of stdout")
    return p


_COMMANDS = {
    "radius": cmd_radius,
    "local-radius": cmd_local_radius,
    "spectrum": cmd_spectrum,
    "approx-eig": cmd_approx_eig,
    "witness": cmd_witness,
}


def _validate(args):
    if getattr(args, "horizon", 1) < 1:
        raise InputError("--horizon must be at least 1")
    if getattr(args, "eps", 1.0) <= 0:
        raise InputError("--eps must be positive")
    t = getattr(args, "t", None)
    if t is not None and t < 0:
        raise InputError("--t must be nonnegative")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        if args.command == "verify-fixture":
            if args.list:
                report, code = {"fixtures": PARAMETERS}, EXIT_OK
            else:
                report, code = cmd_verify_fixture(args)
        else:
            report, code = _COMMANDS[args.command](args, build_operator(args))
    except _CONSTRUCTION_ERRORS as err:
        print(f"error ({err.reason}): {err}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (InputError, ConeSpecError) as err:
        reason = getattr(err, "reason", "input")
        print(f"error ({reason}): {err}", file=sys.stderr)
        return EXIT_INPUT
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
