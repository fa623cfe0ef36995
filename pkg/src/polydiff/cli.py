"""``polydiff`` command line.

Exit codes: 0 ok, 1 a checker ran and reported a failure, 2 parse error,
3 geometry error, 4 gate rejection, 5 numerical failure.  Errors are
written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import diffeo as dg
from . import fields as fl
from . import lemmas
from . import polytope as pt
from .errors import (
    GateRejection,
    GeometryError,
    InternalInvariantViolation,
    NotStratified,
    NumericalError,
    PolydiffError,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_GEOMETRY = 3
EXIT_GATE = 4
EXIT_NUMERICAL = 5


class ParseError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    tol_active: float
    tol_inv: float
    tol_strat: float
    seed: int
    samples: int
    fmt: str | None
    output: str | None


# --------------------------------------------------------------------------
# Loading


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _parse(path: str, parser, *args):
    data = _read_json(path)
    try:
        return parser(data, *args)
    except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_polytope(path: str) -> pt.Polytope:
    return pt.canonicalize(_parse(path, pt.polytope_from_json))


def load_field(path: str, P: pt.Polytope) -> fl.VectorField:
    return _parse(path, fl.field_from_json, P)


def load_diffeo(path: str, P: pt.Polytope, tol_inv: float) -> dg.Diffeo:
    d = _parse(path, dg.diffeo_from_json, P)
    return dg.Diffeo(P, d.word, tol_inv)


def load_points(path: str, n: int) -> np.ndarray:
    """JSON list of points, or CSV whose last *n* numeric columns are the points."""
    if path.endswith(".json"):
        data = _read_json(path)
        try:
            arr = np.array(data, dtype=float).reshape(-1, n)
        except (ValueError, TypeError) as exc:
            raise ParseError(f"{path}: {exc}") from exc
        return arr
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    out = []
    for r in rows:
        try:
            out.append([float(v) for v in r[-n:]])
        except ValueError:
            if out:
                raise ParseError(f"{path}: non-numeric row {r!r}")
            continue  # header
    if not out or any(len(r) != n for r in out):
        raise ParseError(f"{path}: expected at least {n} numeric columns")
    return np.array(out)


# --------------------------------------------------------------------------
# Output helpers


def _num(v) -> str:
    return repr(float(v))


def _emit(cfg: RunConfig, text: str):
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _points_csv(X: np.ndarray, Y: np.ndarray, names=("in", "out")) -> str:
    n = X.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x_{names[0]}_{j}" for j in range(1, n + 1)] + [f"x_{names[1]}_{j}" for j in range(1, n + 1)])
    for x, y in zip(X, Y):
        w.writerow([_num(v) for v in x] + [_num(v) for v in y])
    return buf.getvalue()


def _points_json(X: np.ndarray, Y: np.ndarray, names=("in", "out")) -> str:
    rows = [{names[0]: [float(v) for v in x], names[1]: [float(v) for v in y]} for x, y in zip(X, Y)]
    return _dump_json(rows)


# --------------------------------------------------------------------------
# Commands


def cmd_faces(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    lat = P.lattice
    counts = lat.counts()
    if cfg.fmt == "json":
        body = {
            "dims": {str(d): c for d, c in sorted(counts.items())},
            "faces": pt.lattice_to_json(P),
            "strata": {str(i): [P.describe_face(f) for f in pt.strata(P, i)] for i in range(P.dim + 1)},
        }
        _emit(cfg, _dump_json(body))
        return EXIT_OK
    lines = ["dims: " + " ".join(f"{d}:{c}" for d, c in sorted(counts.items()))]
    for i in range(P.dim + 1):
        lines.append(f"index {i}: {len(pt.strata(P, i))} face(s)")
    _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_strata(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    idx = range(P.dim + 1) if args.index is None else [args.index]
    if args.index is not None and not 0 <= args.index <= P.dim:
        raise ParseError(f"index must lie in 0..{P.dim}")
    if cfg.fmt == "json":
        body = {
            str(i): [
                {"active": sorted(f.active), "dim": f.dim, "face": P.describe_face(f)} for f in pt.strata(P, i)
            ]
            for i in idx
        }
        _emit(cfg, _dump_json(body))
        return EXIT_OK
    lines = []
    for i in idx:
        lines.append(f"index {i}: " + "; ".join(P.describe_face(f) for f in pt.strata(P, i)))
    _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_gate(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    f = load_field(args.field, P)
    cert = fl.sup_op_norm(f, samples_per_face=cfg.samples, tol_strat=cfg.tol_strat)
    try:
        dg.try_near_identity(f, cert)
    except NotStratified as exc:
        v = exc.report.violation
        text = f"REJECTED NotStratified face {v.face}\n"
        body = {"accepted": False, "reason": "NotStratified", "violation": v.as_dict(), "certificate": cert.as_dict()}
        _emit(cfg, _dump_json(body) if cfg.fmt == "json" else text)
        return EXIT_GATE
    except GateRejection:
        text = f"REJECTED GateNotSatisfied q={_num(cert.q)}\n"
        body = {"accepted": False, "reason": "GateNotSatisfied", "certificate": cert.as_dict()}
        _emit(cfg, _dump_json(body) if cfg.fmt == "json" else text)
        return EXIT_GATE
    if cfg.fmt == "json":
        _emit(cfg, _dump_json({"accepted": True, "certificate": cert.as_dict()}))
    else:
        _emit(cfg, f"ACCEPTED q={_num(cert.q)}\n")
    return EXIT_OK


def _input_points(args, P: pt.Polytope) -> np.ndarray:
    if args.points:
        X = load_points(args.points, P.dim)
    else:
        X = dg.grid(P, args.grid)
    return X


def _verify_inside(P, Y, tol):
    for y in Y:
        if not pt.contains(P, y, tol):
            raise InternalInvariantViolation(f"output point {list(map(float, y))} left the polytope")


def cmd_warp(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    d = load_diffeo(args.diffeo, P, cfg.tol_inv)
    X = _input_points(args, P)
    Y = np.array([d.eval(x) for x in X]).reshape(X.shape)
    _verify_inside(P, Y, cfg.tol_active)
    _emit(cfg, _points_json(X, Y) if cfg.fmt == "json" else _points_csv(X, Y))
    return EXIT_OK


def cmd_invert(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    d = dg.invert(load_diffeo(args.diffeo, P, cfg.tol_inv))
    X = _input_points(args, P)
    Y = np.array([d.eval(x) for x in X]).reshape(X.shape)
    _verify_inside(P, Y, cfg.tol_active)
    _emit(cfg, _points_json(X, Y) if cfg.fmt == "json" else _points_csv(X, Y))
    return EXIT_OK


def cmd_compose(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    ds = [load_diffeo(path, P, cfg.tol_inv) for path in args.diffeos]
    out = ds[0]
    for d in ds[1:]:
        out = dg.compose(out, d)
    body = {"word": out.to_json(), "face_permutation": list(dg.face_permutation(out).mapping)}
    _emit(cfg, _dump_json(body))
    return EXIT_OK


def _floats(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad vector {s!r}") from exc


def cmd_check(args, cfg: RunConfig) -> int:
    P = load_polytope(args.polytope)
    if args.lemma == "der-to-face":
        if not args.x0 or not args.v:
            raise ParseError("der-to-face needs --x0 and --v")
        vecs = [_floats(args.x0), _floats(args.v)] + ([_floats(args.w)] if args.w else [])
        if any(len(v) != P.dim for v in vecs):
            raise ParseError("vector length does not match the polytope dimension")
        rep = lemmas.check_der_to_face(P, vecs[0], vecs[1], vecs[2] if args.w else None, args.t_max,
                                       tol=cfg.tol_active)
    elif args.lemma == "face-into-face":
        if not args.diffeo:
            raise ParseError("face-into-face needs --diffeo")
        d = load_diffeo(args.diffeo, P, cfg.tol_inv)
        rep = lemmas.check_face_into_face(d, samples=cfg.samples, seed=cfg.seed)
    else:
        if not args.field:
            raise ParseError("lip-inverse needs --field")
        f = load_field(args.field, P)
        rep = lemmas.check_lip_inverse(f, pairs=args.pairs, seed=cfg.seed)
    body = {"lemma": args.lemma, **rep.as_dict()}
    _emit(cfg, _dump_json(body))
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def cmd_falsify(args, cfg: RunConfig) -> int:
    cand = _parse(args.candidate, lemmas.LocalAdditionCandidate.from_json)
    w = lemmas.falsify_local_addition(cand)
    body = {"candidate": cand.description, **w.as_dict()}
    _emit(cfg, _dump_json(body))
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def _positive(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-active", type=_positive, default=pt.TOL_ACTIVE,
                        help="slack below which a constraint counts as active")
    common.add_argument("--tol-inv", type=_positive, default=dg.TOL_INV,
                        help="stopping tolerance of the fixed-point inversion")
    common.add_argument("--tol-strat", type=_positive, default=fl.TOL_STRAT,
                        help="tangency tolerance of the numeric stratification check")
    common.add_argument("--seed", type=int, default=42, help="seed for every sampler")
    common.add_argument("--samples", type=int, default=8, help="samples per face for sampled checks")
    common.add_argument("--format", dest="fmt", choices=("text", "json", "csv"), default=None,
                        help="output format (default depends on the command)")
    common.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")

    p = argparse.ArgumentParser(prog="polydiff", description="Face-respecting diffeomorphisms of polytopes.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("faces", parents=[common], help="face counts by dimension")
    s.add_argument("polytope")
    s.set_defaults(func=cmd_faces)

    s = sub.add_parser("strata", parents=[common], help="faces of each index stratum")
    s.add_argument("polytope")
    s.add_argument("--index", type=int, default=None, help="only this index")
    s.set_defaults(func=cmd_strata)

    s = sub.add_parser("gate", parents=[common], help="certify id + f")
    s.add_argument("polytope")
    s.add_argument("field")
    s.set_defaults(func=cmd_gate)

    for name, func, helptext in (("warp", cmd_warp, "images of grid points"),
                                 ("invert", cmd_invert, "preimages of grid points")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("polytope")
        s.add_argument("diffeo")
        s.add_argument("--grid", type=int, default=3, help="points per axis")
        s.add_argument("--points", default=None, help="JSON list or CSV (last n columns)")
        s.set_defaults(func=func)

    s = sub.add_parser("compose", parents=[common], help="concatenate diffeo words")
    s.add_argument("polytope")
    s.add_argument("diffeos", nargs="+")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("check", parents=[common], help="run a lemma checker")
    s.add_argument("lemma", choices=("der-to-face", "face-into-face", "lip-inverse"))
    s.add_argument("polytope")
    s.add_argument("--diffeo", help="diffeo word JSON (face-into-face)")
    s.add_argument("--field", help="vector field JSON (lip-inverse)")
    s.add_argument("--x0", help="curve base point, comma separated (der-to-face)")
    s.add_argument("--v", help="initial velocity; use --v=-1,0 for negative entries")
    s.add_argument("--w", help="second-order coefficient, default 0")
    s.add_argument("--t-max", type=float, default=1.0, help="curve parameter range")
    s.add_argument("--pairs", type=int, default=500, help="point pairs (lip-inverse)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("falsify", parents=[common], help="falsify a local-addition candidate")
    s.add_argument("candidate")
    s.set_defaults(func=cmd_falsify)
    return p


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    if args.samples < 1:
        return _fail(EXIT_PARSE, ParseError("--samples must be positive"))
    cfg = RunConfig(args.command, args.tol_active, args.tol_inv, args.tol_strat,
                    args.seed, args.samples, args.fmt, args.output)
    try:
        return args.func(args, cfg)
    except ParseError as exc:
        return _fail(EXIT_PARSE, exc)
    except GeometryError as exc:
        return _fail(EXIT_GEOMETRY, exc)
    except GateRejection as exc:
        return _fail(EXIT_GATE, exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except PolydiffError as exc:
        return _fail(EXIT_NUMERICAL, exc)


if __name__ == "__main__":
    sys.exit(main())
