"""Seeded verification suites shared by the command line front-end."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import moyal, nctorus, strictfield
from .corpus import biprincipal_bibundles, composable_pairs
from .groupoid import compose_bibundles, is_principal
from .hilbmod import interior_tensor, is_morita_equivalence
from .kktheory import intersection, k0, k_iso_check, kk_class, kk_invertible
from .quantfunctor import check_functoriality, check_identity, quantize_arrow


def _result(name: str, cases: int, failures: list, **extra) -> dict:
    return {"suite": name, "cases": cases, "failures": failures[:5], "n_failures": len(failures),
            "ok": not failures, **extra}


def functor_suite(seed: int, count: int = 20, tol: float = 1e-9, workers: int | None = None) -> dict:
    pairs = composable_pairs(seed, count)

    def one(i):
        M, N = pairs[i]
        rep = check_functoriality(M, N, tol)
        fails = []
        if not rep.ok:
            fails.append({"case": i, "report": rep.to_json()})
        if not is_principal(compose_bibundles(M, N)):
            fails.append({"case": i, "error": "composite not principal"})
        for G in (M.left, M.right):
            if not check_identity(G):
                fails.append({"case": i, "error": f"identity not preserved for {G.name}"})
        return fails, rep.witness_residual or 0.0

    with ThreadPoolExecutor(max_workers=workers) as pool:
        out = list(pool.map(one, range(len(pairs))))
    failures = [f for fs, _ in out for f in fs]
    worst = max((r for _, r in out), default=0.0)
    return _result("functoriality", len(pairs), failures, max_witness_residual=float(f"{worst:.3e}"))


def morita_suite(seed: int, count: int = 10) -> dict:
    failures = []
    for i, B in enumerate(biprincipal_bibundles(seed, count)):
        E = quantize_arrow(B)
        x = kk_class(E)
        rk = (k0(E.left_alg).rank, k0(E.right_alg).rank)
        if not is_morita_equivalence(E):
            failures.append({"case": i, "error": "not an imprimitivity bimodule"})
        if not kk_invertible(x):
            failures.append({"case": i, "error": "KK class not invertible", "matrix": x.to_json()})
        if rk[0] != rk[1] or not k_iso_check(x).ok:
            failures.append({"case": i, "error": "K0 ranks differ", "ranks": list(rk)})
    return _result("morita_k_chain", count, failures)


def kk_suite(seed: int, count: int = 50) -> dict:
    failures = []
    for i, (M, N) in enumerate(composable_pairs(seed + 1, count)):
        E, F = quantize_arrow(M), quantize_arrow(N)
        lhs = kk_class(interior_tensor(E, F))
        rhs = intersection(kk_class(E), kk_class(F))
        if lhs != rhs:
            failures.append({"case": i, "tensor": lhs.to_json(), "product": rhs.to_json()})
    return _result("kk_functoriality", count, failures)


def moyal_suite(seed: int, K: int = 5, n_assoc: int = 100, n_dirac: int = 100, n_affine: int = 50) -> dict:
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(n_assoc):
        n = int(rng.integers(1, 3))
        f, g, h = (moyal.random_poly(rng, n) for _ in range(3))
        if not moyal.check_associativity(f, g, h, K):
            failures.append({"check": "associativity", "case": i, "f": moyal.format_poly(f), "g": moyal.format_poly(g),
                             "h": moyal.format_poly(h)})
    for i in range(n_dirac):
        n = int(rng.integers(1, 3))
        f, g = (moyal.random_poly(rng, n) for _ in range(2))
        if not moyal.check_dirac(f, g):
            failures.append({"check": "dirac", "case": i, "f": moyal.format_poly(f), "g": moyal.format_poly(g)})
    for i in range(n_affine):
        n = int(rng.integers(1, 3))
        f, g = (moyal.random_poly(rng, n) for _ in range(2))
        S, v = moyal.random_symplectic(rng, n), moyal.random_vector(rng, n)
        if not moyal.affine_covariance(f, g, S, v, K):
            failures.append({"check": "affine", "case": i, "S": [[str(x) for x in r] for r in S]})
    return _result("moyal", n_assoc + n_dirac + n_affine, failures, K=K)


def random_quadratic(rng: np.random.Generator) -> nctorus.QuadraticIrrational:
    while True:
        d = int(rng.choice([2, 3, 5, 6, 7, 10, 11, 13]))
        a = int(rng.integers(-5, 6))
        b = int(rng.choice([-3, -2, -1, 1, 2, 3]))
        c = int(rng.integers(1, 6))
        try:
            return nctorus.QuadraticIrrational.make(a, b, c, d)
        except nctorus.NotQuadraticError:
            continue


def torus_suite(seed: int, count: int = 20, max_len: int = 12) -> dict:
    rng = np.random.default_rng(seed)
    failures = []
    r2 = nctorus.QuadraticIrrational.make(0, 1, 1, 2)
    phi = nctorus.QuadraticIrrational.make(1, 1, 2, 5)
    if nctorus.gl2z_equivalent(r2, phi):
        failures.append({"error": "sqrt(2) ~ golden ratio"})
    for i in range(count):
        t = random_quadratic(rng)
        for other in (t + 1, t.reciprocal()):
            if not nctorus.gl2z_equivalent(t, other):
                failures.append({"case": i, "theta": str(t), "other": str(other), "error": "declared inequivalent"})
            elif nctorus.find_witness(t, other, max_len) is None:
                failures.append({"case": i, "theta": str(t), "other": str(other), "error": "no witness"})
        if nctorus.cf_value(nctorus.continued_fraction(t), t.d) != t:
            failures.append({"case": i, "theta": str(t), "error": "reconstruction"})
    return _result("torus", count, failures)


def parse_q_range(text: str) -> list[int]:
    """``a:b`` or ``a:b:step`` (inclusive) or a comma list."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        a, b, s = parts
        return list(range(a, b + 1, s))
    return [int(x) for x in text.split(",") if x.strip()]


def strictfield_suite(seed: int, qs: list[int] | None = None, pairs: int = 10, gap_bound: float = 0.05) -> dict:
    rng = np.random.default_rng(seed)
    qs = qs or list(range(11, 200, 4))
    failures = []
    e10, e01 = strictfield.TrigPoly.mode(1, 0), strictfield.TrigPoly.mode(0, 1)
    for q in (qs[0], qs[-1]):
        got = strictfield.dirac_defect(e10, e01, q)
        want = abs(2 * q * np.sin(np.pi / q) - 2 * np.pi)
        if abs(got - want) > 1e-9:
            failures.append({"check": "closed form", "q": q, "got": got, "want": want})
    slopes = []
    for i in range(pairs):
        f, g = strictfield.random_trig(rng), strictfield.random_trig(rng)
        s, _ = strictfield.decay_slope(f, g, qs)
        slopes.append(s)
        if s < 0.9:
            failures.append({"check": "slope", "case": i, "slope": s})
    qmax = max(qs)
    for f in norm_test_family(rng):
        rows = strictfield.norm_section(f, [qmax])
        gap = abs(rows[0][1] - rows[-1][1])
        if gap > gap_bound:
            failures.append({"check": "norm gap", "q": qmax, "gap": gap})
    return _result("strictfield", pairs, failures, min_slope=min(slopes))


def norm_test_family(rng: np.random.Generator, n_random: int = 5) -> list:
    """Fixed unitary and cosine symbols plus seeded real first-harmonic symbols.

    The random members are scaled to unit sup-norm: the fiber/sup gap is
    linear in the symbol, so an absolute bound needs a fixed scale.
    """
    T = strictfield.TrigPoly
    fam = [T.mode(1, 0), T.mode(1, 0) + T.mode(-1, 0), T.mode(0, 1) + T.mode(0, -1) + T.mode(1, 0) + T.mode(-1, 0)]
    for _ in range(n_random):
        f = strictfield.random_trig(rng, max_mode=1, n_terms=3, real=True)
        fam.append(f.scale(1.0 / strictfield.sup_norm(f)))
    return fam


def run_all(seed: int, K: int = 5, tol: float = 1e-9, qs: list[int] | None = None) -> list[dict]:
    return [
        functor_suite(seed, tol=tol),
        morita_suite(seed),
        kk_suite(seed),
        moyal_suite(seed, K=K),
        torus_suite(seed),
        strictfield_suite(seed, qs),
    ]


