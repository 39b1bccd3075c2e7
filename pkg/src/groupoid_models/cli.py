"""Command-line front end: ``groupoid-models`` (or ``python3 -m groupoid_models``).

Subcommands::

    suite NAME                      run one verification suite
    build jiang-su | razak-jacelon  build and verify an interval chain
    gelfand roundtrip               partial maps versus commutative homomorphisms
    construct NAME                  emit a construction as JSON with its checks

Exit status is 0 when every check passes, 1 when a check fails and 2 for
usage or input errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import DEFAULTS, override_tolerances
from .errors import GroupoidModelsError

SUITE_NAMES = ("core", "morphisms", "uhf", "jiang-su", "razak-jacelon", "gelfand", "limits")


def _pair(text):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers like 2,3, got {text!r}") from None
    return a, b


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _outputs(p):
    p.add_argument("--seed", type=int, default=DEFAULTS.seed, help="random seed (default %(default)s)")
    p.add_argument("--tol", type=float, default=None,
                   help="override the general and membership tolerances")
    p.add_argument("--report", metavar="PATH", help="write the JSON report here")
    p.add_argument("--csv", metavar="PATH", help="write the CSV table here (norms or parameters)")
    p.add_argument("--svg", metavar="PATH", help="write the path-map figure here")
    p.add_argument("--quiet", action="store_true", help="print only the overall verdict")


def _chain_options(p, default_start):
    p.add_argument("--stages", type=int, default=2,
                   help="number of algebras in the chain (default %(default)s)")
    p.add_argument("--grid-log2", type=int, default=DEFAULTS.grid_log2,
                   help="grid of the last stage; earlier stages are finer (default %(default)s)")
    p.add_argument("--start", type=_pair, default=default_start,
                   help="starting parameters (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupoid-models",
                                     description="Finite groupoid algebra models with checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("suite", help="run a verification suite")
    s.add_argument("name", choices=SUITE_NAMES)
    s.add_argument("--stages", type=int, default=2)
    s.add_argument("--grid-log2", type=int, default=DEFAULTS.grid_log2)
    s.add_argument("--start", type=_ints, default=None,
                   help="chain start (interval suites) or UHF factors")
    s.add_argument("--samples", type=int, default=1000, help="size of the random checks")
    s.add_argument("--size", type=int, default=6, help="largest space for the gelfand suite")
    _outputs(s)

    b = sub.add_parser("build", help="build and verify an interval chain")
    bsub = b.add_subparsers(dest="kind", required=True)
    js = bsub.add_parser("jiang-su", help="dimension drop chain from Z[p,q]")
    _chain_options(js, (2, 3))
    js.add_argument("--choice", type=int, default=0,
                    help="use the CHOICE-th admissible prime pair at every stage")
    _outputs(js)
    rj = bsub.add_parser("razak-jacelon", help="building block chain from A[n,n']")
    _chain_options(rj, (1, 2))
    _outputs(rj)

    g = sub.add_parser("gelfand", help="finite spaces versus commutative algebras")
    gsub = g.add_subparsers(dest="action", required=True)
    rt = gsub.add_parser("roundtrip", help="exhaustive and random round trips")
    rt.add_argument("--size", type=int, default=6, help="largest space, exhaustive")
    rt.add_argument("--samples", type=int, default=200, help="random composable pairs")
    _outputs(rt)

    c = sub.add_parser("construct", help="emit a construction as JSON")
    c.add_argument("name", choices=("matrix", "finite-dim", "uhf", "tensor-power", "af",
                                    "dimension-drop", "zn", "building-block"))
    c.add_argument("--n", type=_ints, default=(2,),
                   help="sizes: n | block sizes | factors | m,n | n,n'")
    c.add_argument("--target", type=_ints, default=None, help="af: target block sizes")
    c.add_argument("--multiplicity", type=_ints, default=None,
                   help="af: multiplicities, row-major (target x source)")
    c.add_argument("--depth", type=int, default=2, help="tensor-power depth")
    c.add_argument("--grid-log2", type=int, default=DEFAULTS.grid_log2)
    c.add_argument("--out", metavar="PATH", help="write the JSON here instead of stdout")
    c.add_argument("--quiet", action="store_true")
    c.add_argument("--tol", type=float, default=None)
    return parser


def _config(args, **extra):
    from .report import SuiteConfig

    return SuiteConfig(seed=args.seed, grid_log2=getattr(args, "grid_log2", DEFAULTS.grid_log2),
                       stages=getattr(args, "stages", 2), **extra)


def _finish(result, args):
    from .report import write_outputs

    write_outputs(result, args.report, args.csv, args.svg)
    if args.quiet:
        print(f"{result.name}: {'PASS' if result.passed else 'FAIL'}")
    else:
        print(result.summary())
    return 0 if result.passed else 1


def _run_suite(args):
    from .report import run_suite

    cfg = _config(args, start=args.start, samples=args.samples, max_size=args.size)
    return _finish(run_suite(args.name, cfg), args)


def _run_build(args):
    from .report import run_suite

    extra = {"start": args.start}
    if args.kind == "jiang-su":
        extra["choice"] = args.choice
    return _finish(run_suite(args.kind, _config(args, **extra)), args)


def _run_gelfand(args):
    from .report import run_suite

    cfg = _config(args, samples=args.samples, max_size=args.size)
    return _finish(run_suite("gelfand", cfg), args)


def _run_construct(args):
    import json

    from . import constructions as C
    from .checks import Report
    from .groupoid import groupoid_to_json, validate_groupoid
    from .interval import algebra_to_json
    from .morphisms import check_partial_morphism, morphism_to_json

    n, s = args.n, args.grid_log2
    rep = Report("construct")
    if args.name in ("matrix", "finite-dim"):
        G = C.make_matrix_groupoid(n[0]) if args.name == "matrix" else C.make_finite_dim_groupoid(n)
        rep, doc = validate_groupoid(G), {"groupoid": groupoid_to_json(G)}
    elif args.name in ("uhf", "tensor-power"):
        system = (C.make_uhf_system(n) if args.name == "uhf"
                  else C.make_tensor_power_truncation(C.make_matrix_groupoid(n[0]), args.depth))
        doc = {"stages": [groupoid_to_json(G) for G in system.stages],
               "bondings": [morphism_to_json(b) for b in system.bondings]}
        for k, G in enumerate(system.stages):
            rep = rep.extend(validate_groupoid(G), f"stage[{k}].")
        for k, b in enumerate(system.bondings):
            rep = rep.extend(check_partial_morphism(b), f"bonding[{k}].")
    elif args.name == "af":
        if args.target is None or args.multiplicity is None:
            raise GroupoidModelsError("af needs --target and --multiplicity")
        m = C.make_af_bonding(n, args.target, args.multiplicity)
        rep = check_partial_morphism(m)
        doc = {"domain": groupoid_to_json(m.domain), "codomain": groupoid_to_json(m.codomain),
               "morphism": morphism_to_json(m)}
    else:
        if args.name == "dimension-drop":
            alg = C.make_dimension_drop(*_two(n), grid_log2=s)
        elif args.name == "zn":
            alg = C.make_Zn(n[0], grid_log2=s)
        else:
            alg = C.make_building_block(*_two(n), grid_log2=s)
        rep = alg.constraint_report(alg.unit())
        doc = {"algebra": algebra_to_json(alg)}
    doc["checks"] = rep.to_dict()
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif not args.quiet:
        sys.stdout.write(text)
    print(f"construct {args.name}: {'PASS' if rep.passed else 'FAIL'}",
          file=sys.stderr if not args.out and not args.quiet else sys.stdout)
    return 0 if rep.passed else 1


def _two(n):
    if len(n) != 2:
        raise GroupoidModelsError("expected two sizes, e.g. --n 2,3")
    return n


_COMMANDS = {"suite": _run_suite, "build": _run_build, "gelfand": _run_gelfand,
             "construct": _run_construct}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    tol = {} if args.tol is None else {"tol": args.tol, "membership": args.tol}
    try:
        with override_tolerances(**tol):
            return _COMMANDS[args.command](args)
    except (GroupoidModelsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
