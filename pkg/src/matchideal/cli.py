"""Command-line front end: ``matchideal <group> <verb> [options]``.

Exit status: 0 success, 1 a check came out false, 2 usage or input error,
3 an internal invariant failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import lasserre, matching, symmetry, tour, tsp
from .algebra import format_polynomial, parse_polynomial
from .certificate import format_certificate, parse_certificate, split_blocks, verify_certificate
from .config import ORACLE_ENV_VAR
from .errors import InternalInvariant, MatchIdealError, NotAMember, NotAnSos

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- argument helpers --------------------------------------------------------------------


def _need(args, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return value


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _poly(args):
    if getattr(args, "terms", None) is not None:
        return parse_polynomial(args.terms.replace(";", "\n"))
    return parse_polynomial(_read(_need(args, "poly")))


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _matching(text: str) -> list[tuple]:
    edges = []
    for tok in text.replace(",", " ").split():
        u, _, v = tok.partition("-")
        edges.append((int(u), int(v)))
    return edges


def _fmt_matching(M) -> str:
    return " ".join(f"{u}-{v}" for u, v in M)


def _verdict(verdict) -> int:
    print(verdict.reason)
    return EXIT_OK if verdict else EXIT_FALSE


# -- pm / tour ------------------------------------------------------------------------------

_OPS = {
    "pm": dict(
        nf=matching.normal_form,
        derive=matching.derive_zero,
        symmetrize=matching.symmetrize_constant,
        witness=matching.matching_witness,
        count=lambda n: len(matching.enumerate_perfect_matchings(n)),
        show=_fmt_matching,
    ),
    "tour": dict(
        nf=tour.tour_normal_form,
        derive=tour.tour_derive_zero,
        symmetrize=tour.tour_symmetrize_constant,
        witness=tour.tour_witness,
        count=lambda n: len(tour.enumerate_tours(n)),
        show=lambda s: " ".join(map(str, s)),
    ),
}


def cmd_enumerate(args) -> int:
    for M in matching.enumerate_perfect_matchings(_need(args, "n")):
        print(_fmt_matching(M))
    return EXIT_OK


def cmd_oracle(args) -> int:
    ops, n = _OPS[args.group], _need(args, "n")
    if getattr(args, "poly", None) is None and getattr(args, "terms", None) is None:
        print(ops["count"](n))
        return EXIT_OK
    hit = ops["witness"](_poly(args), n)
    if hit is None:
        print(f"zero on all {ops['count'](n)} solutions")
        return EXIT_OK
    print(f"nonzero ({hit[1]}) at {ops['show'](hit[0])}")
    return EXIT_FALSE


def cmd_nf(args) -> int:
    nf, cert = _OPS[args.group]["nf"](_poly(args), _need(args, "n"))
    sys.stdout.write(format_polynomial(nf))
    if getattr(args, "out", None):
        Path(args.out).write_text(format_certificate(cert))
    return EXIT_OK


def cmd_derive(args) -> int:
    ops = _OPS[args.group]
    try:
        cert = ops["derive"](_poly(args), _need(args, "n"), method=args.method or "direct", degree=args.level)
    except NotAMember as exc:
        shown = "" if exc.witness is None else f" at {ops['show'](exc.witness)}"
        print(f"not a member: value {exc.value}{shown}", file=sys.stderr)
        return EXIT_FALSE
    _emit(args, format_certificate(cert))
    return EXIT_OK


def cmd_verify(args) -> int:
    cert = parse_certificate(_read(_need(args, "cert")))
    expected = "match" if args.group == "pm" else "tour"
    if cert.family != expected:
        raise UsageError(f"expected a {expected} certificate, got {cert.family}")
    return _verdict(verify_certificate(cert))


def cmd_symmetrize(args) -> int:
    F, n = _poly(args), _need(args, "n")
    constant, cert = _OPS[args.group]["symmetrize"](F, n)
    print(f"constant {constant}")
    if args.group == "tour":
        try:
            report = tour.tour_constant_report(F, n)
        except MatchIdealError:
            report = None
        if report is not None:
            print(f"closed form {report.closed_form} {'matches' if report.matches else 'differs'}")
    if getattr(args, "out", None):
        Path(args.out).write_text(format_certificate(cert))
    return EXIT_OK


# -- sym --------------------------------------------------------------------------------------


def cmd_orbit_connect(args) -> int:
    M1, M2 = _matching(_need(args, "m1")), _matching(_need(args, "m2"))
    S = _ints(args.fix or "")
    sigma = symmetry.orbit_connector(M1, M2, S)
    print(" ".join(map(str, sigma.images)))
    ok = (
        sigma.is_even()
        and all(sigma(v) == v for v in S)
        and symmetry.act_matching(sigma, M1) == tuple(sorted((min(e), max(e)) for e in M2))
    )
    print("even, fixes S, maps M1 to M2" if ok else "connector check failed")
    return EXIT_OK if ok else EXIT_INTERNAL


def cmd_junta(args) -> int:
    h = symmetry.parse_solution_function(_read(_need(args, "func")))
    report = symmetry.find_junta_support(h)
    print("support " + (" ".join(map(str, report.support)) or "-"))
    print(f"sign_needed {str(report.sign_needed).lower()}")
    return EXIT_OK


def cmd_sdp2sos(args) -> int:
    if args.example:
        examples = {"pm4": symmetry.pm4_example, "edge": symmetry.edge_indicator_example}
        if args.example not in examples:
            raise UsageError(f"unknown example {args.example!r}")
        data = examples[args.example]()
    else:
        _, data = symmetry.read_formulation(_need(args, "dir"))
    sos = symmetry.formulation_to_sos(data, args.f, tol=args.tol if args.tol is not None else 1e-9)
    print(f"d {data.d}")
    print(f"distinct {len(sos.functions)}")
    print(f"mu {sos.mu!r}")
    print(f"max_residual {float(sos.residuals.max(initial=0.0))!r}")
    return EXIT_OK


# -- tsp --------------------------------------------------------------------------------------


def _instance(args):
    return tsp.parse_instance(_read(_need(args, "instance")))


def cmd_val(args) -> int:
    inst = _instance(args)
    if args.tour:
        print(tsp.tour_value(inst, _ints(args.tour)))
    else:
        sys.stdout.write(format_polynomial(tsp.val_polynomial(inst)))
    return EXIT_OK


def cmd_double(args) -> int:
    _emit(args, tsp.format_instance(tsp.double_instance(_instance(args))))
    return EXIT_OK


def cmd_phi(args) -> int:
    image = tsp.phi_permutation(_ints(_need(args, "tour")))
    print(" ".join(map(str, image.images)))
    print("even" if image.is_even() else "odd")
    return EXIT_OK


def cmd_canonicalize(args) -> int:
    inst = _instance(args)
    tau = _ints(_need(args, "tour"))
    out = tsp.canonicalize(tau, inst)
    print(" ".join(map(str, out)))
    print(f"value {tsp.tour_value(inst, out)} <= {tsp.tour_value(inst, tau)}")
    return EXIT_OK


def cmd_fold(args) -> int:
    sys.stdout.write(format_polynomial(tsp.fold_substitution(_poly(args), _need(args, "n"))))
    return EXIT_OK


def _squares(text: str) -> tuple[list, Fraction]:
    mu, squares = Fraction(0), []
    for head, body in split_blocks(text.splitlines()):
        if head.startswith("MU"):
            mu = Fraction(head.split()[1])
        elif head == "SQUARE":
            squares.append(parse_polynomial(body))
        else:
            raise UsageError(f"unexpected block {head!r} in the squares file")
    return squares, mu


def cmd_refute_build(args) -> int:
    n = args.n if args.n is not None else 10
    eps = Fraction(args.eps or "0")
    if args.squares:
        squares, mu = _squares(_read(args.squares))
    else:
        squares, mu = tsp.refutation_example(n, eps)
    try:
        ref = tsp.build_refutation(squares, mu, eps, n)
    except NotAnSos as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FALSE
    _emit(args, tsp.format_refutation(ref))
    return EXIT_OK


def cmd_refute_verify(args) -> int:
    return _verdict(tsp.verify_refutation(tsp.parse_refutation(_read(_need(args, "cert")))))


# -- lasserre ---------------------------------------------------------------------------------


def _level(args) -> int:
    return args.level if args.level is not None else 2


def cmd_lasserre_build(args) -> int:
    inst = _instance(args)
    prog = lasserre.lasserre_build(inst, _level(args))
    print(f"n {prog.n}")
    print(f"level {prog.k}")
    print(f"basis {len(prog.basis)}")
    print(f"moments {len(prog.variables)}")
    print(f"equalities {len(prog.equalities)}")
    print(f"objective_constant {prog.objective.get(0, 0)}")
    if args.certify:
        cert = lasserre.pair_square_certificate(inst)
        Path(args.certify).write_text(lasserre.format_numeric_certificate(cert))
    return EXIT_OK


def cmd_lasserre_export(args) -> int:
    prog = lasserre.lasserre_build(_instance(args), _level(args))
    path, idx = lasserre.export_sdpa(prog, _need(args, "out"))
    print(path)
    print(idx)
    return EXIT_OK


def cmd_lasserre_verify(args) -> int:
    inst = _instance(args)
    cert = lasserre.parse_numeric_certificate(_read(_need(args, "cert")))
    report = lasserre.verify_numeric_certificate(inst, cert, args.tol)
    print(f"{report.reason}")
    print(f"bound {report.bound}")
    print(f"min_eigenvalue {report.min_eigenvalue!r}")
    print(f"residual {report.residual!r}")
    return EXIT_OK if report else EXIT_FALSE


# -- parser -------------------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--n", type=int, default=S, help="problem size")
    p.add_argument("--level", type=int, default=S, help="degree / Lasserre level")
    p.add_argument("--eps", default=S, help="slack parameter in [0, 1)")
    p.add_argument("--method", choices=("direct", "inductive"), default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--max-oracle", type=int, default=S, help="largest n for brute-force enumeration")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="matchideal", parents=[common], description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name, fn, *options):
        p = sub.add_parser(name, parents=[common])
        for opt in options:
            p.add_argument(f"--{opt}", default=argparse.SUPPRESS)
        p.set_defaults(fn=fn)
        return p

    poly = ("poly", "terms")
    for g in ("pm", "tour"):
        sub = groups.add_parser(g).add_subparsers(dest="verb", required=True)
        if g == "pm":
            leaf(sub, "enumerate", cmd_enumerate)
            leaf(sub, "oracle", cmd_oracle, *poly)
        leaf(sub, "nf", cmd_nf, *poly, "out")
        leaf(sub, "derive", cmd_derive, *poly, "out")
        leaf(sub, "verify", cmd_verify, "cert")
        leaf(sub, "symmetrize", cmd_symmetrize, *poly, "out")

    sub = groups.add_parser("sym").add_subparsers(dest="verb", required=True)
    leaf(sub, "orbit-connect", cmd_orbit_connect, "m1", "m2", "fix")
    leaf(sub, "junta", cmd_junta, "func")
    p = leaf(sub, "sdp2sos", cmd_sdp2sos, "dir", "example")
    p.add_argument("--f", type=int, default=0, help="objective index")

    sub = groups.add_parser("tsp").add_subparsers(dest="verb", required=True)
    leaf(sub, "val", cmd_val, "instance", "tour")
    leaf(sub, "double", cmd_double, "instance", "out")
    leaf(sub, "phi", cmd_phi, "tour")
    leaf(sub, "canonicalize", cmd_canonicalize, "instance", "tour")
    leaf(sub, "fold", cmd_fold, *poly)
    leaf(sub, "refute-build", cmd_refute_build, "squares", "out")
    leaf(sub, "refute-verify", cmd_refute_verify, "cert")

    sub = groups.add_parser("lasserre").add_subparsers(dest="verb", required=True)
    leaf(sub, "build", cmd_lasserre_build, "instance", "certify")
    leaf(sub, "export", cmd_lasserre_export, "instance", "out")
    leaf(sub, "verify", cmd_lasserre_verify, "instance", "cert")
    return parser


_DEFAULTS = dict(
    n=None, level=None, eps=None, method=None, tol=None, max_oracle=None, poly=None, terms=None, out=None,
    cert=None, m1=None, m2=None, fix=None, func=None, dir=None, example=None, instance=None, tour=None,
    squares=None, certify=None,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    for key, value in _DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    if args.max_oracle is not None:
        os.environ[ORACLE_ENV_VAR] = str(args.max_oracle)
    try:
        return args.fn(args)
    except InternalInvariant as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (UsageError, MatchIdealError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
