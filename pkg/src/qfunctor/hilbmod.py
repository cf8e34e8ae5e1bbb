"""Hilbert bimodules over finite-dimensional C*-algebras.

A bimodule stores three sparse exact tensors over its basis ``e_0..e_{dim-1}``:

* ``lact[(i, p)]`` -- the vector ``a_i . e_p``
* ``ract[(p, j)]`` -- the vector ``e_p . b_j``
* ``ip[(p, q)]``   -- the ``B``-element ``<e_p, e_q>``, antilinear in ``e_p``

Completeness and countable generation are automatic in finite dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cstar import DEFAULT_TOL, FinCStar, matrix_algebra, scalars
from .exact import (
    ONE,
    ZERO,
    Scalar,
    conj,
    gauss,
    nullspace,
    pivot_columns,
    rank,
    solve_square,
    sp_axpy,
    to_complex,
)
from .groupoid import ValidationReport

SparseTensor = Mapping[tuple[int, int], Mapping[int, Scalar]]


class AlgebraMismatchError(TypeError):
    """Bimodules over incompatible algebras."""


class BimoduleAxiomError(ValueError):
    def __init__(self, report: ValidationReport):
        first = report.violations[0]
        super().__init__(f"bimodule axiom violated: {first}")
        self.report = report
        self.axiom = first.axiom


class DegenerateInnerProductError(BimoduleAxiomError):
    def __init__(self, report: ValidationReport, null_vector: dict):
        super().__init__(report)
        self.null_vector = null_vector


def _clean(t: SparseTensor) -> dict:
    out = {}
    for k, v in t.items():
        w = {int(i): gauss(c) for i, c in v.items()}
        w = {i: c for i, c in w.items() if c}
        if w:
            out[(int(k[0]), int(k[1]))] = w
    return out


def _same_alg(A: FinCStar, B: FinCStar) -> bool:
    return A is B or A.same_structure(B)


@dataclass(eq=False)
class HilbertBimodule:
    left_alg: FinCStar
    right_alg: FinCStar
    dim: int
    lact: dict
    ract: dict
    ip: dict
    label: str = ""
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    # exact evaluation
    def left(self, a: Mapping[int, Scalar], x: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for i, c in a.items():
            for p, d in x.items():
                v = self.lact.get((i, p))
                if v:
                    sp_axpy(out, c * d, v)
        return out

    def right(self, x: Mapping[int, Scalar], b: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for p, d in x.items():
            for j, c in b.items():
                v = self.ract.get((p, j))
                if v:
                    sp_axpy(out, d * c, v)
        return out

    def inner(self, x: Mapping[int, Scalar], y: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for p, c in x.items():
            cc = conj(c)
            for q, d in y.items():
                v = self.ip.get((p, q))
                if v:
                    sp_axpy(out, cc * d, v)
        return out

    # numerics
    def left_mats(self) -> np.ndarray:
        """``L[i][q, p]`` = coefficient of ``e_q`` in ``a_i . e_p``."""
        if "L" not in self._cache:
            L = np.zeros((self.left_alg.dim, self.dim, self.dim), dtype=complex)
            for (i, p), v in self.lact.items():
                for q, c in v.items():
                    L[i, q, p] = to_complex(c)
            self._cache["L"] = L
        return self._cache["L"]

    def right_mats(self) -> np.ndarray:
        """``R[j][q, p]`` = coefficient of ``e_q`` in ``e_p . b_j``."""
        if "R" not in self._cache:
            R = np.zeros((self.right_alg.dim, self.dim, self.dim), dtype=complex)
            for (p, j), v in self.ract.items():
                for q, c in v.items():
                    R[j, q, p] = to_complex(c)
            self._cache["R"] = R
        return self._cache["R"]

    def ip_dense(self) -> np.ndarray:
        if "IP" not in self._cache:
            T = np.zeros((self.dim, self.dim, self.right_alg.dim), dtype=complex)
            for (p, q), v in self.ip.items():
                for k, c in v.items():
                    T[p, q, k] = to_complex(c)
            self._cache["IP"] = T
        return self._cache["IP"]

    def left_op(self, a: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(a, dtype=complex), self.left_mats(), axes=1)

    def right_op(self, b: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(b, dtype=complex), self.right_mats(), axes=1)

    def to_json(self) -> dict:
        from .exact import encode

        def dump(t):
            return [[k[0], k[1], [[i, encode(c)] for i, c in sorted(v.items())]] for k, v in sorted(t.items())]

        return {
            "kind": "bimodule",
            "label": self.label,
            "left_alg": self.left_alg.label,
            "right_alg": self.right_alg.label,
            "dim": self.dim,
            "lact": dump(self.lact),
            "ract": dump(self.ract),
            "ip": dump(self.ip),
            "multiplicity_matrix": [list(r) for r in multiplicity_matrix(self).entries],
        }


# -- axioms -----------------------------------------------------------------

def _psd_violation(E: HilbertBimodule, tol: float) -> float | None:
    """Most negative eigenvalue of the block Gram matrices ``[phi_b(<e_p, e_q>)]``, if below ``-tol``."""
    W = E.right_alg.wedderburn()
    ipd = E.ip_dense()
    worst = 0.0
    scale = max(1.0, float(np.abs(ipd).max()) if ipd.size else 1.0)
    for img in W.images:
        n = img.shape[1]
        blocks = np.tensordot(ipd, img, axes=1)  # (p, q, n, n)
        big = blocks.transpose(0, 2, 1, 3).reshape(E.dim * n, E.dim * n)
        if np.abs(big - big.conj().T).max() > tol * scale:
            return float("nan")
        ev = np.linalg.eigvalsh((big + big.conj().T) / 2)
        worst = min(worst, float(ev.min()) if ev.size else 0.0)
    return worst if worst < -tol * scale else None


def check_bimodule(E: HilbertBimodule, tol: float = DEFAULT_TOL) -> tuple[ValidationReport, dict | None]:
    """Check every bimodule axiom; returns the report and a null vector if the inner product degenerates."""
    rep = ValidationReport()
    A, B = E.left_alg, E.right_alg
    dA, dB, dE = A.dim, B.dim, E.dim
    for (i, p), v in E.lact.items():
        if not (0 <= i < dA and 0 <= p < dE and all(0 <= q < dE for q in v)):
            rep.add("left action index range", i, p)
    for (p, j), v in E.ract.items():
        if not (0 <= j < dB and 0 <= p < dE and all(0 <= q < dE for q in v)):
            rep.add("right action index range", p, j)
    for (p, q), v in E.ip.items():
        if not (0 <= p < dE and 0 <= q < dE and all(0 <= k < dB for k in v)):
            rep.add("inner product index range", p, q)
    if not rep.ok:
        return rep, None
    ea = [{i: ONE} for i in range(dA)]
    eb = [{j: ONE} for j in range(dB)]
    ex = [{p: ONE} for p in range(dE)]
    lvec = {(i, p): dict(E.lact.get((i, p), {})) for i in range(dA) for p in range(dE)}
    rvec = {(p, j): dict(E.ract.get((p, j), {})) for p in range(dE) for j in range(dB)}
    for i in range(dA):
        for j in range(dA):
            aij = A.product(ea[i], ea[j])
            for p in range(dE):
                if E.left(ea[i], lvec[(j, p)]) != E.left(aij, ex[p]):
                    rep.add("left module associativity", i, j, p)
    for j in range(dB):
        for k in range(dB):
            bjk = B.product(eb[j], eb[k])
            for p in range(dE):
                if E.right(rvec[(p, j)], eb[k]) != E.right(ex[p], bjk):
                    rep.add("right module associativity", p, j, k)
    for i in range(dA):
        for p in range(dE):
            for j in range(dB):
                if E.right(lvec[(i, p)], eb[j]) != E.left(ea[i], rvec[(p, j)]):
                    rep.add("actions commute", i, p, j)
    ipv = {(p, q): dict(E.ip.get((p, q), {})) for p in range(dE) for q in range(dE)}
    for p in range(dE):
        for q in range(dE):
            if B.star(ipv[(p, q)]) != ipv[(q, p)]:
                rep.add("<x,y>* = <y,x>", p, q)
            for j in range(dB):
                if E.inner(ex[p], rvec[(q, j)]) != B.product(ipv[(p, q)], eb[j]):
                    rep.add("<x,yb> = <x,y>b", p, q, j)
    for i in range(dA):
        astar = A.star(ea[i])
        for p in range(dE):
            ax = E.left(astar, ex[p])
            for q in range(dE):
                if E.inner(ax, ex[q]) != E.inner(ex[p], lvec[(i, q)]):
                    rep.add("<a*x,y> = <x,ay>", i, p, q)
    if not rep.ok:
        return rep, None
    neg = _psd_violation(E, tol)
    if neg is not None:
        rep.add("<x,x> >= 0", neg)
        return rep, None
    smat = [{q: B.trace(ipv[(p, q)]) for q in range(dE)} for p in range(dE)]
    smat = [{q: c for q, c in row.items() if c} for row in smat]
    null = nullspace(smat, dE)
    if null:
        rep.add("<x,x> = 0 only for x = 0", sorted((k, str(c)) for k, c in null[0].items()))
        return rep, null[0]
    span = [dict(v) for v in E.lact.values()]
    if rank(span, dE) < dE:
        rep.add("left action nondegenerate (A.E = E)", rank(span, dE), dE)
    return rep, None


def make_bimodule(A: FinCStar, B: FinCStar, dim: int, lact: SparseTensor, ract: SparseTensor,
                  ip: SparseTensor, label: str = "", tol: float = DEFAULT_TOL, meta: dict | None = None) -> HilbertBimodule:
    """Build and verify a Hilbert ``A``-``B`` bimodule; raises on the first violated axiom."""
    E = HilbertBimodule(A, B, int(dim), _clean(lact), _clean(ract), _clean(ip), label, dict(meta or {}))
    rep, null = check_bimodule(E, tol)
    if null is not None:
        raise DegenerateInnerProductError(rep, null)
    if not rep.ok:
        raise BimoduleAxiomError(rep)
    return E


# -- standard examples ------------------------------------------------------

def column_bimodule(n: int) -> HilbertBimodule:
    """``C^n`` as a ``Mat(n)``-``C`` bimodule with ``<x, y> = x* y``."""
    A, C = matrix_algebra(n), scalars()
    lact = {(a * n + b, b): {a: ONE} for a in range(n) for b in range(n)}
    ract = {(p, 0): {p: ONE} for p in range(n)}
    ip = {(p, p): {0: ONE} for p in range(n)}
    return make_bimodule(A, C, n, lact, ract, ip, label=f"col({n})")


def row_bimodule(n: int) -> HilbertBimodule:
    """``C^n`` (row vectors) as a ``C``-``Mat(n)`` bimodule with ``<x, y> = x* y`` (a matrix)."""
    C, B = scalars(), matrix_algebra(n)
    lact = {(0, p): {p: ONE} for p in range(n)}
    ract = {(a, a * n + b): {b: ONE} for a in range(n) for b in range(n)}
    ip = {(a, b): {a * n + b: ONE} for a in range(n) for b in range(n)}
    return make_bimodule(C, B, n, lact, ract, ip, label=f"row({n})")


def direct_sum(E: HilbertBimodule, F: HilbertBimodule) -> HilbertBimodule:
    if not (_same_alg(E.left_alg, F.left_alg) and _same_alg(E.right_alg, F.right_alg)):
        raise AlgebraMismatchError("direct sum needs the same algebra pair")
    s = E.dim

    def shift(t, pos):
        out = {}
        for k, v in t.items():
            kk = tuple(x + s if i in pos else x for i, x in enumerate(k))
            out[kk] = {q + s: c for q, c in v.items()}
        return out

    lact = {**E.lact, **shift(F.lact, (1,))}
    ract = {**E.ract, **shift(F.ract, (0,))}
    ip = dict(E.ip)
    for (p, q), v in F.ip.items():
        ip[(p + s, q + s)] = dict(v)
    return make_bimodule(E.left_alg, E.right_alg, s + F.dim, lact, ract, ip, label=f"({E.label}+{F.label})")


def transport(E: HilbertBimodule, T: Sequence[Sequence[object]], label: str = "") -> HilbertBimodule:
    """Copy of ``E`` in the basis ``f_p = sum_q T[q][p] e_q`` (``T`` exact and invertible)."""
    n = E.dim
    cols = [{q: gauss(T[q][p]) for q in range(n) if gauss(T[q][p])} for p in range(n)]
    rows = [{p: gauss(T[q][p]) for p in range(n) if gauss(T[q][p])} for q in range(n)]
    ident = [{p: ONE} for p in range(n)]
    inv_cols = solve_square(rows, ident)  # columns of T^-1

    def back(v: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for q, c in v.items():
            sp_axpy(out, c, inv_cols[q])
        return out

    A, B = E.left_alg, E.right_alg
    lact = {(i, p): back(E.left({i: ONE}, cols[p])) for i in range(A.dim) for p in range(n)}
    ract = {(p, j): back(E.right(cols[p], {j: ONE})) for p in range(n) for j in range(B.dim)}
    ip = {(p, q): E.inner(cols[p], cols[q]) for p in range(n) for q in range(n)}
    return make_bimodule(A, B, n, lact, ract, ip, label=label or f"{E.label}'")


def permute(E: HilbertBimodule, perm: Sequence[int]) -> HilbertBimodule:
    """Relabel basis vector ``e_p`` as ``e_{perm[p]}``."""
    n = E.dim
    T = [[ONE if perm[p] == q else ZERO for q in range(n)] for p in range(n)]
    # new basis f_q = e_p where perm[p] = q, i.e. T[p][q] = 1
    return transport(E, T)


# -- invariants -------------------------------------------------------------

@dataclass(frozen=True)
class MultiplicityMatrix:
    """``entries[i][j]`` = multiplicity of (A-block i) x (conjugate B-block j)."""

    entries: tuple[tuple[int, ...], ...]
    row_sizes: tuple[int, ...]
    col_sizes: tuple[int, ...]

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(len(self.row_sizes), len(self.col_sizes))

    def carrier_dim(self) -> int:
        return int(np.array(self.row_sizes) @ self.array() @ np.array(self.col_sizes))

    def __matmul__(self, other: "MultiplicityMatrix") -> "MultiplicityMatrix":
        if self.col_sizes != other.row_sizes:
            raise AlgebraMismatchError("middle block structures differ")
        prod = self.array() @ other.array()
        return MultiplicityMatrix(tuple(map(tuple, prod.tolist())), self.row_sizes, other.col_sizes)

    def __add__(self, other: "MultiplicityMatrix") -> "MultiplicityMatrix":
        if (self.row_sizes, self.col_sizes) != (other.row_sizes, other.col_sizes):
            raise AlgebraMismatchError("block structures differ")
        s = self.array() + other.array()
        return MultiplicityMatrix(tuple(map(tuple, s.tolist())), self.row_sizes, self.col_sizes)

    def __rmul__(self, k: int) -> "MultiplicityMatrix":
        return MultiplicityMatrix(tuple(map(tuple, (k * self.array()).tolist())), self.row_sizes, self.col_sizes)

    def is_permutation(self) -> bool:
        m = self.array()
        return m.shape[0] == m.shape[1] and set(np.unique(m)) <= {0, 1} and bool(
            (m.sum(axis=0) == 1).all() and (m.sum(axis=1) == 1).all()
        )


def _rounded(x: float, what: str) -> int:
    k = int(round(x))
    if abs(x - k) > 1e-6:
        raise ArithmeticError(f"{what} = {x} is not an integer")
    return k


def multiplicity_matrix(E: HilbertBimodule) -> MultiplicityMatrix:
    """``m[i][j] = dim(p_i E q_j) / (n_i n_j)`` with ``p_i``, ``q_j`` central block projections."""
    if "mult" in E._cache:
        return E._cache["mult"]
    WA, WB = E.left_alg.wedderburn(), E.right_alg.wedderburn()
    rows = []
    for i, ni in enumerate(WA.dimension_vector):
        Lp = E.left_op(WA.central_projection(i))
        row = []
        for j, nj in enumerate(WB.dimension_vector):
            Rq = E.right_op(WB.central_projection(j))
            row.append(_rounded(np.trace(Lp @ Rq).real / (ni * nj), f"multiplicity[{i}][{j}]"))
        rows.append(tuple(row))
    m = MultiplicityMatrix(tuple(rows), WA.dimension_vector, WB.dimension_vector)
    if m.carrier_dim() != E.dim:
        raise ArithmeticError(f"multiplicities {m.entries} do not recover dim {E.dim}")
    E._cache["mult"] = m
    return m


# -- interior tensor product ------------------------------------------------

def interior_tensor(E: HilbertBimodule, F: HilbertBimodule, tol: float = DEFAULT_TOL) -> HilbertBimodule:
    """``E (x)_B F``: the algebraic tensor product modulo the null space of

    ``<x1 (x) y1, x2 (x) y2> = <y1, <x1, x2> y2>``.

    The null space is the kernel of the scalar Gram form ``tau_C(<u, v>)``
    (``tau_C`` faithful), computed exactly.  The quotient basis is a maximal set
    of independent pure tensors ``e_p (x) f_r``.
    """
    if not _same_alg(E.right_alg, F.left_alg):
        raise AlgebraMismatchError("interior tensor needs E.right_alg == F.left_alg")
    C = F.right_alg
    dE, dF = E.dim, F.dim
    n = dE * dF
    # t[r1][r'] = tau_C(<f_r1, f_r'>), stored by column r'
    tcols: dict[int, dict[int, Scalar]] = {}
    for (r1, rp), v in F.ip.items():
        c = C.trace(v)
        if c:
            tcols.setdefault(rp, {})[r1] = c
    tb_cache: dict[int, dict[tuple[int, int], Scalar]] = {}

    def tb(b: int) -> dict[tuple[int, int], Scalar]:
        if b not in tb_cache:
            out: dict[tuple[int, int], Scalar] = {}
            for r2 in range(dF):
                for rp, c in F.lact.get((b, r2), {}).items():
                    for r1, t in tcols.get(rp, {}).items():
                        key = (r1, r2)
                        s = out.get(key, ZERO) + c * t
                        if s:
                            out[key] = s
                        else:
                            out.pop(key, None)
            tb_cache[b] = out
        return tb_cache[b]

    S: dict[int, dict[int, Scalar]] = {}
    for (p1, p2), beta in E.ip.items():
        for b, coef in beta.items():
            for (r1, r2), t in tb(b).items():
                row = S.setdefault(p1 * dF + r1, {})
                col = p2 * dF + r2
                s = row.get(col, ZERO) + coef * t
                if s:
                    row[col] = s
                else:
                    row.pop(col, None)
    rows = [S.get(k, {}) for k in range(n)]
    piv = pivot_columns(rows, n)
    r = len(piv)
    # coordinates of a pre-quotient vector u: K u with K = S_PP^-1 S_P,:
    spp = [{t: rows[pi].get(pj, ZERO) for t, pj in enumerate(piv) if rows[pi].get(pj)} for pi in piv]
    cols: dict[int, dict[int, Scalar]] = {}
    for t, pi in enumerate(piv):
        for col, c in rows[pi].items():
            cols.setdefault(col, {})[t] = c
    used = sorted(cols)
    kcols = dict(zip(used, solve_square(spp, [cols[c] for c in used]))) if r else {}

    def coords(u: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for col, c in u.items():
            if col in kcols:
                sp_axpy(out, c, kcols[col])
        return out

    pairs = [divmod(k, dF) for k in piv]
    A = E.left_alg
    lact, ract, ip = {}, {}, {}
    for t, (p, rr) in enumerate(pairs):
        for i in range(A.dim):
            v = E.lact.get((i, p))
            if v:
                w = coords({pp * dF + rr: c for pp, c in v.items()})
                if w:
                    lact[(i, t)] = w
        for j in range(C.dim):
            v = F.ract.get((rr, j))
            if v:
                w = coords({p * dF + q: c for q, c in v.items()})
                if w:
                    ract[(t, j)] = w
    for t1, (p1, r1) in enumerate(pairs):
        for t2, (p2, r2) in enumerate(pairs):
            beta = E.ip.get((p1, p2))
            if not beta:
                continue
            y = F.left(beta, {r2: ONE})
            v = F.inner({r1: ONE}, y)
            if v:
                ip[(t1, t2)] = v
    meta = {"pivots": tuple(pairs), "prequotient_dim": n}
    return make_bimodule(A, C, r, lact, ract, ip, label=f"({E.label} (x) {F.label})", tol=tol, meta=meta)


# -- equivalence ------------------------------------------------------------

@dataclass
class Intertwiner:
    """Unitary bimodule isomorphism ``E -> F`` as a ``F.dim x E.dim`` matrix in the stored bases."""

    matrix: np.ndarray
    residual: float

    def to_json(self) -> dict:
        return {
            "residual": float(f"{self.residual:.3e}"),
            "matrix": [[[round(z.real, 12), round(z.imag, 12)] for z in row] for row in self.matrix],
        }


def intertwiner_residual(E: HilbertBimodule, F: HilbertBimodule, U: np.ndarray) -> float:
    """Largest defect of ``U`` in the left/right intertwining and inner-product identities."""
    LE, LF = E.left_mats(), F.left_mats()
    RE, RF = E.right_mats(), F.right_mats()
    res = 0.0
    if LE.size:
        res = max(res, float(np.abs(np.einsum("qp,ipr->iqr", U, LE) - np.einsum("iqs,sr->iqr", LF, U)).max()))
    if RE.size:
        res = max(res, float(np.abs(np.einsum("qp,jpr->jqr", U, RE) - np.einsum("jqs,sr->jqr", RF, U)).max()))
    ipE, ipF = E.ip_dense(), F.ip_dense()
    pulled = np.einsum("ap,bq,abk->pqk", U.conj(), U, ipF)
    if ipE.size:
        res = max(res, float(np.abs(pulled - ipE).max()))
    return res


def _isotypic_frame(E: HilbertBimodule, i: int, j: int, m: int) -> np.ndarray:
    """Columns ``E^A_{k0} v_s E^B_{0l}`` for an ``s``-orthonormal basis ``v_s`` of ``e E f``."""
    WA, WB = E.left_alg.wedderburn(), E.right_alg.wedderburn()
    ni, nj = WA.dimension_vector[i], WB.dimension_vector[j]
    P = E.left_op(WA.minimal_projection(i)) @ E.right_op(WB.minimal_projection(j))
    u, sv, _ = np.linalg.svd(P)
    V = u[:, :m]
    if m < len(sv) and sv[m] > 1e-6:
        raise ArithmeticError("corner space larger than the multiplicity")
    ipd = E.ip_dense()
    img = WB.images[j]
    # <v_a, v_b> = s(a, b) f with f = E_00 in block j
    gram_b = np.einsum("pa,qb,pqk->abk", V.conj(), V, ipd)
    s = np.tensordot(gram_b, img[:, 0, 0], axes=([2], [0]))
    s = (s + s.conj().T) / 2
    chol = np.linalg.cholesky(s)
    V = V @ np.linalg.inv(chol.conj().T)
    cols = []
    for k in range(ni):
        Lk = E.left_op(WA.matrix_unit(i, k, 0))
        for l in range(nj):
            Rl = E.right_op(WB.matrix_unit(j, 0, l))
            M = Lk @ Rl
            for t in range(m):
                cols.append(M @ V[:, t])
    return np.array(cols).T


def unitary_equivalent(E: HilbertBimodule, F: HilbertBimodule, tol: float = DEFAULT_TOL) -> Intertwiner | None:
    """A unitary intertwiner ``E -> F`` or ``None``.

    Decided by equality of multiplicity matrices; the witness is assembled
    from the isotypic decompositions of both bimodules and then validated.
    """
    if not (_same_alg(E.left_alg, F.left_alg) and _same_alg(E.right_alg, F.right_alg)):
        raise AlgebraMismatchError("unitary equivalence needs the same algebra pair")
    mE, mF = multiplicity_matrix(E), multiplicity_matrix(F)
    if mE != mF:
        return None
    if E.dim == 0:
        return Intertwiner(np.zeros((0, 0), dtype=complex), 0.0)
    XE, XF = [], []
    for i, row in enumerate(mE.entries):
        for j, m in enumerate(row):
            if m:
                XE.append(_isotypic_frame(E, i, j, m))
                XF.append(_isotypic_frame(F, i, j, m))
    XE_, XF_ = np.concatenate(XE, axis=1), np.concatenate(XF, axis=1)
    U = XF_ @ np.linalg.inv(XE_)
    res = intertwiner_residual(E, F, U)
    scale = max(1.0, float(np.abs(E.ip_dense()).max()), float(np.abs(F.ip_dense()).max()))
    if res > tol * scale * max(1.0, float(np.abs(U).max())):
        raise ArithmeticError(f"witness unitary failed validation (residual {res:.3e})")
    return Intertwiner(U, res)


def intertwiner_space(E: HilbertBimodule, F: HilbertBimodule) -> list[dict]:
    """Exact basis of all bimodule maps ``T: E -> F`` (entry ``T[q, p]`` at index ``q*E.dim + p``)."""
    dE, dF = E.dim, F.dim
    rows = []

    def add_eqs(mats_e: dict, mats_f: dict, keys):
        # T X_E(k) - X_F(k) T = 0 entrywise
        for k in keys:
            xe = {}
            for (a, p), v in mats_e.items():
                if a == k:
                    for pp, c in v.items():
                        xe.setdefault(p, {})[pp] = c  # X_E[pp, p]
            xf = {}
            for (a, qq), v in mats_f.items():
                if a == k:
                    for q, c in v.items():
                        xf.setdefault(q, {})[qq] = c  # X_F[q, qq]
            for q in range(dF):
                for p in range(dE):
                    row: dict[int, Scalar] = {}
                    for pp, c in xe.get(p, {}).items():
                        idx = q * dE + pp
                        row[idx] = row.get(idx, ZERO) + c
                    for qq, c in xf.get(q, {}).items():
                        idx = qq * dE + p
                        row[idx] = row.get(idx, ZERO) - c
                    row = {k2: c for k2, c in row.items() if c}
                    if row:
                        rows.append(row)

    add_eqs(E.lact, F.lact, range(E.left_alg.dim))
    flip = lambda t: {(j, p): v for (p, j), v in t.items()}  # noqa: E731
    add_eqs(flip(E.ract), flip(F.ract), range(E.right_alg.dim))
    return nullspace(rows, dE * dF)


def brute_force_equivalent(E: HilbertBimodule, F: HilbertBimodule, trials: int = 8, seed: int = 0) -> bool:
    """Independent decision: does an invertible bimodule map ``E -> F`` exist?

    Solves the full linear intertwining system exactly and tests random
    integer combinations of its solutions for invertibility.  For Hilbert
    bimodules over finite-dimensional C*-algebras an invertible bimodule map
    can be polar-decomposed into a unitary one.
    """
    if E.dim != F.dim:
        return False
    if E.dim == 0:
        return True
    basis = intertwiner_space(E, F)
    if not basis:
        return False
    from sympy.polys.domains import QQ_I
    from sympy.polys.matrices import DomainMatrix

    rng = np.random.default_rng(seed)
    n = E.dim
    for _ in range(trials):
        coeffs = rng.integers(-50, 51, size=len(basis))
        T: dict[int, Scalar] = {}
        for c, v in zip(coeffs, basis):
            sp_axpy(T, gauss(int(c)), v)
        data: dict[int, dict[int, Scalar]] = {}
        for idx, c in T.items():
            q, p = divmod(idx, n)
            data.setdefault(q, {})[p] = c
        if DomainMatrix(data, (n, n), QQ_I).to_field().det():
            return True
    return False


def is_morita_equivalence(E: HilbertBimodule) -> bool:
    return morita_report(E)["imprimitivity"]


def morita_report(E: HilbertBimodule) -> dict:
    """Fullness of the inner product and ``A ~ K(E)`` checked directly.

    ``dim K(E) = sum_j mu_j^2`` where ``mu_j = dim(E f_j)`` for a minimal
    projection ``f_j`` of the right algebra's ``j``-th block.
    """
    A, B = E.left_alg, E.right_alg
    span_rank = rank([dict(v) for v in E.ip.values()], B.dim)
    full = span_rank == B.dim
    flat = []
    for i in range(A.dim):
        row = {}
        for p in range(E.dim):
            for q, c in E.lact.get((i, p), {}).items():
                row[q * E.dim + p] = c
        flat.append(row)
    faithful = rank(flat, E.dim * E.dim) == A.dim
    WB = B.wedderburn()
    mus = [
        _rounded(np.trace(E.right_op(WB.minimal_projection(j))).real, f"right multiplicity {j}")
        for j in range(WB.n_blocks)
    ]
    compacts = sum(mu * mu for mu in mus)
    onto = faithful and compacts == A.dim
    return {
        "full": full,
        "faithful": faithful,
        "compacts_dim": compacts,
        "left_dim": A.dim,
        "onto_compacts": onto,
        "imprimitivity": bool(full and onto),
        "permutation_matrix": multiplicity_matrix(E).is_permutation(),
    }
