"""Command line front-end: ``qfunctor <verb> ...``.

Every verb writes a JSON report (sorted keys, rounded floats) to stdout or
``--out`` and exits 0 on success, 1 on a failed check and 2 on bad input.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import io, moyal, nctorus, strictfield, suites
from .groupoid import Bibundle, FiniteGroupoid, compose_bibundles, is_principal, validate
from .hilbmod import interior_tensor
from .kktheory import intersection, k0, k_iso_check, kk_class
from .quantfunctor import check_functoriality, check_morita_preservation, quantize_arrow, quantize_object

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _emit(args, report) -> None:
    text = report if isinstance(report, str) else io.dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _principal(B: Bibundle, what: str) -> None:
    if not is_principal(B):
        raise ValueError(f"{what} is not a principal bibundle")


def cmd_validate(args) -> int:
    reports = []
    ok = True
    for path in args.files:
        obj = io.load(path)
        rep = validate(obj)
        ok &= rep.ok
        entry = {"file": path, "kind": "groupoid" if isinstance(obj, FiniteGroupoid) else "bibundle", **rep.to_json()}
        if isinstance(obj, Bibundle):
            entry["principal"] = rep.ok and is_principal(obj)
        reports.append(entry)
    _emit(args, {"ok": ok, "reports": reports})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compose(args) -> int:
    M, N = io.load_bibundle(args.M), io.load_bibundle(args.N)
    _principal(M, args.M)
    C = compose_bibundles(M, N)
    _emit(args, io.bibundle_to_doc(C))
    return EXIT_OK


def cmd_quantize(args) -> int:
    obj = io.load(args.file)
    if isinstance(obj, FiniteGroupoid):
        _emit(args, io.algebra_to_doc(quantize_object(obj), seed=args.seed))
        return EXIT_OK
    _principal(obj, args.file)
    E = quantize_arrow(obj, args.tolerance)
    _emit(args, {
        "bimodule": io.bimodule_to_doc(E),
        "left_algebra": io.algebra_to_doc(E.left_alg, seed=args.seed),
        "right_algebra": io.algebra_to_doc(E.right_alg, seed=args.seed),
        "morita": check_morita_preservation(obj).status,
    })
    return EXIT_OK


def cmd_functoriality(args) -> int:
    M, N = io.load_bibundle(args.M), io.load_bibundle(args.N)
    _principal(M, args.M)
    _principal(N, args.N)
    rep = check_functoriality(M, N, args.tolerance)
    out = rep.to_json()
    if rep.witness is not None and args.witness:
        out["witness"] = rep.witness.to_json()
    _emit(args, out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_kk(args) -> int:
    M = io.load_bibundle(args.M)
    _principal(M, args.M)
    E = quantize_arrow(M, args.tolerance)
    x = kk_class(E)
    out = {
        "class": x.to_json(),
        "k0_ranks": [k0(E.left_alg).rank, k0(E.right_alg).rank],
        "k_iso": k_iso_check(x).to_json(),
    }
    ok = k_iso_check(x).ok
    if args.N:
        N = io.load_bibundle(args.N)
        _principal(N, args.N)
        F = quantize_arrow(N, args.tolerance)
        prod = intersection(x, kk_class(F))
        tens = kk_class(interior_tensor(E, F, args.tolerance))
        out["intersection"] = prod.to_json()
        out["class_of_tensor"] = tens.to_json()
        out["functorial"] = prod == tens
        ok &= prod == tens
    out["ok"] = ok
    _emit(args, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_torus(args) -> int:
    t1, t2 = nctorus.parse_quadratic(args.theta1), nctorus.parse_quadratic(args.theta2)
    eq = nctorus.gl2z_equivalent(t1, t2)
    if eq:
        w = nctorus.find_witness(t1, t2, args.max_len)
        head = "Morita equivalent (GL(2,Z) orbit)"
        body = {"equivalent": True, "theta1": str(t1), "theta2": str(t2),
                "witness": None if w is None else {"matrix": [list(r) for r in w.matrix], "word": list(w.word)}}
    else:
        head = "NOT Morita equivalent; classical tori Morita equivalent (cited)"
        body = {"equivalent": False, **nctorus.counterexample_report(t1, t2).to_json()}
    _emit(args, head + "\n" + io.dumps(body))
    return EXIT_OK


def cmd_moyal(args) -> int:
    if args.f and args.g:
        f = moyal.parse_poly(args.f)
        g = moyal.parse_poly(args.g, f.n)
        out = {
            "star": moyal.star(f, g, args.K).to_json(),
            "bracket": moyal.format_poly(moyal.poisson_bracket(f, g)),
            "dirac": moyal.check_dirac(f, g),
            "classical_limit": moyal.check_classical_limit(f, g),
        }
        out["ok"] = out["dirac"] and out["classical_limit"]
    else:
        out = suites.moyal_suite(args.seed, K=args.K, n_assoc=args.count, n_dirac=args.count, n_affine=max(1, args.count // 2))
    _emit(args, out)
    return EXIT_OK if out["ok"] else EXIT_FAIL


def cmd_strictfield(args) -> int:
    qs = suites.parse_q_range(args.q_range)
    f = strictfield.parse_trig(args.symbol)
    g = strictfield.parse_trig(args.partner) if args.partner else None
    rows = strictfield.norm_section(f, qs)
    lines = ["hbar\tdefect\tnorm"]
    for (h, nrm), q in zip(rows, qs):
        d = strictfield.dirac_defect(f, g, q) if g is not None else float("nan")
        lines.append(f"{h:.10g}\t{d:.10g}\t{nrm:.10g}")
    lines.append(f"0\t0\t{rows[-1][1]:.10g}")
    ok = True
    if args.eps is not None:
        rep = strictfield.usc_check(strictfield.StrictField.build(f, qs), args.eps)
        ok = rep.ok
        lines.append(f"# usc_check eps={args.eps}: {'ok' if ok else 'FLAGGED'}")
    _emit(args, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_corpus(args) -> int:
    qs = suites.parse_q_range(args.q_range) if args.q_range else None
    results = suites.run_all(args.seed, K=args.K, tol=args.tolerance, qs=qs)
    ok = all(r["ok"] for r in results)
    _emit(args, {"seed": args.seed, "ok": ok, "suites": results})
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--K", type=int, default=moyal.DEFAULT_K, help="star-product truncation order")
    common.add_argument("--q-range", default=None, help="a:b[:step] or comma list of q values")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="qfunctor", description="Finite-scale quantization functor toolkit.")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("validate", parents=[common], help="check groupoid/bibundle files")
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("compose", parents=[common], help="compose two bibundles")
    s.add_argument("M")
    s.add_argument("N")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("quantize", parents=[common], help="algebra or bimodule dump")
    s.add_argument("file")
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("functoriality", parents=[common], help="Q(M o N) vs Q(M) (x) Q(N)")
    s.add_argument("M")
    s.add_argument("N")
    s.add_argument("--witness", action="store_true", help="include the witness unitary")
    s.set_defaults(func=cmd_functoriality)

    s = sub.add_parser("kk", parents=[common], help="KK class of Q(M), optionally its product with Q(N)")
    s.add_argument("M")
    s.add_argument("N", nargs="?")
    s.set_defaults(func=cmd_kk)

    s = sub.add_parser("torus-morita", parents=[common], help="decide Morita equivalence of A_theta1, A_theta2")
    s.add_argument("theta1")
    s.add_argument("theta2")
    s.add_argument("--max-len", type=int, default=12)
    s.set_defaults(func=cmd_torus)

    s = sub.add_parser("moyal-check", parents=[common], help="star-product checks")
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--count", type=int, default=100)
    s.set_defaults(func=cmd_moyal)

    s = sub.add_parser("strictfield", parents=[common], help="fuzzy-torus field table (TSV)")
    s.add_argument("--symbol", default="e(1,0)")
    s.add_argument("--partner", default="e(0,1)", help="second symbol for the Dirac defect; empty to skip")
    s.add_argument("--eps", type=float, default=None)
    s.set_defaults(func=cmd_strictfield)

    s = sub.add_parser("corpus", parents=[common], help="seeded regression over all suites")
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "strictfield" and args.q_range is None:
        args.q_range = "11:199:4"
    try:
        return args.func(args)
    except io.ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_INPUT
    except (ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
