"""Finite-dimensional C*-algebras given by structure constants.

Structure constants and the involution are exact Gaussian rationals.  The
Wedderburn form (block sizes and a block-diagonal *-isomorphism) is computed
numerically from the left regular representation, orthonormalised with the
faithful trace ``tau(x) = Tr L(x)``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .exact import ONE, ZERO, Scalar, conj, nullspace, sp_axpy, sp_dense, to_complex
from .groupoid import UNDEF, FiniteGroupoid, ValidationReport, pair_groupoid

DEFAULT_TOL = 1e-9


class NotSemisimpleError(ValueError):
    """The trace form has a nonzero radical; ``witness`` is a nilpotent element."""

    def __init__(self, message: str, witness: dict):
        super().__init__(message)
        self.witness = witness


class NotCStarError(ValueError):
    """The involution does not make the algebra a C*-algebra."""


@dataclass(eq=False)
class FinCStar:
    """``mult[(i, j)]`` is the sparse vector ``e_i e_j``; ``invol[i]`` is ``e_i*``."""

    dim: int
    mult: Mapping[tuple[int, int], Mapping[int, Scalar]]
    invol: tuple[Mapping[int, Scalar], ...]
    label: str = ""
    meta: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    # -- exact arithmetic ---------------------------------------------------
    def product(self, x: Mapping[int, Scalar], y: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for i, a in x.items():
            for j, b in y.items():
                v = self.mult.get((i, j))
                if v:
                    sp_axpy(out, a * b, v)
        return out

    def star(self, x: Mapping[int, Scalar]) -> dict:
        out: dict = {}
        for i, a in x.items():
            sp_axpy(out, conj(a), self.invol[i])
        return out

    def trace_vector(self) -> list[Scalar]:
        """``tau(e_k) = Tr L(e_k)``, exact."""
        if "trace" not in self._cache:
            t = [ZERO] * self.dim
            for (i, j), v in self.mult.items():
                c = v.get(j)
                if c:
                    t[i] += c
            self._cache["trace"] = t
        return self._cache["trace"]

    def trace(self, x: Mapping[int, Scalar]) -> Scalar:
        t = self.trace_vector()
        s = ZERO
        for k, a in x.items():
            s += a * t[k]
        return s

    def unit(self) -> dict:
        if "unit" not in self._cache:
            # u e_j = e_j for every j
            d = self.dim
            rows, rhs = [], []
            for j in range(d):
                for k in range(d):
                    row = {}
                    for i in range(d):
                        c = self.mult.get((i, j), {}).get(k)
                        if c:
                            row[i] = c
                    rows.append(row)
                    rhs.append(ONE if j == k else ZERO)
            aug = [{**r, d: -b} if b else r for r, b in zip(rows, rhs)]
            sols = [v for v in nullspace(aug, d + 1) if v.get(d)]
            if not sols:
                raise ValueError(f"{self.label or 'algebra'} has no unit")
            v = sols[0]
            scale = ONE / v[d]
            self._cache["unit"] = {i: scale * a for i, a in v.items() if i != d}
        return dict(self._cache["unit"])

    def center(self) -> list[dict]:
        """Exact basis of the center."""
        if "center" not in self._cache:
            d = self.dim
            rows = []
            for j in range(d):
                per_k: dict[int, dict[int, Scalar]] = {}
                for i in range(d):
                    diff = dict(self.mult.get((i, j), {}))
                    sp_axpy(diff, -ONE, self.mult.get((j, i), {}))
                    for k, c in diff.items():
                        per_k.setdefault(k, {})[i] = c
                rows.extend(per_k.values())
            self._cache["center"] = nullspace(rows, d)
        return [dict(z) for z in self._cache["center"]]

    def same_structure(self, other: "FinCStar") -> bool:
        if self is other:
            return True
        if self.dim != other.dim or len(self.invol) != len(other.invol):
            return False
        keys = {k for k, v in self.mult.items() if v} | {k for k, v in other.mult.items() if v}
        if any(dict(self.mult.get(k, {})) != dict(other.mult.get(k, {})) for k in keys):
            return False
        return all(dict(a) == dict(b) for a, b in zip(self.invol, other.invol))

    # -- numerics -----------------------------------------------------------
    def dense_mult(self) -> np.ndarray:
        """``T[i, j, k]`` = coefficient of ``e_k`` in ``e_i e_j``."""
        if "T" not in self._cache:
            d = self.dim
            T = np.zeros((d, d, d), dtype=complex)
            for (i, j), v in self.mult.items():
                for k, c in v.items():
                    T[i, j, k] = to_complex(c)
            self._cache["T"] = T
        return self._cache["T"]

    def dense_invol(self) -> np.ndarray:
        """``S[:, i]`` = coordinates of ``e_i*``."""
        if "S" not in self._cache:
            S = np.zeros((self.dim, self.dim), dtype=complex)
            for i, v in enumerate(self.invol):
                S[:, i] = sp_dense(v, self.dim)
            self._cache["S"] = S
        return self._cache["S"]

    def as_vector(self, x) -> np.ndarray:
        if isinstance(x, np.ndarray):
            return x.astype(complex)
        return sp_dense(x, self.dim)

    def left_matrix(self, x) -> np.ndarray:
        return np.einsum("i,ijk->kj", self.as_vector(x), self.dense_mult())

    def right_matrix(self, y) -> np.ndarray:
        return np.einsum("j,ijk->ki", self.as_vector(y), self.dense_mult())

    def star_vector(self, x) -> np.ndarray:
        return self.dense_invol() @ np.conj(self.as_vector(x))

    def wedderburn(self, seed: int = 0, tol: float = DEFAULT_TOL) -> "Wedderburn":
        with self._lock:
            key = ("wedderburn", seed)
            if key not in self._cache:
                self._cache[key] = _wedderburn(self, seed, tol)
            return self._cache[key]


def check_algebra(A: FinCStar) -> ValidationReport:
    """Exact check of associativity and the involution axioms on basis elements."""
    rep = ValidationReport()
    d = A.dim
    basis = [{i: ONE} for i in range(d)]
    prods = {(i, j): dict(A.mult.get((i, j), {})) for i in range(d) for j in range(d)}
    for i in range(d):
        for j in range(d):
            left = prods[(i, j)]
            for k in range(d):
                lhs = A.product(left, basis[k])
                rhs = A.product(basis[i], prods[(j, k)])
                if lhs != rhs:
                    rep.add("associativity", i, j, k)
    for i in range(d):
        if A.star(A.invol[i]) != basis[i]:
            rep.add("involutive", i)
        for j in range(d):
            if A.star(prods[(i, j)]) != A.product(A.invol[j], A.invol[i]):
                rep.add("anti-multiplicative", i, j)
    return rep


def convolution_algebra(G: FiniteGroupoid) -> FinCStar:
    """Convolution algebra with counting measure: ``d_g d_h = d_{gh}`` if composable, else 0."""
    mult = {}
    for g in range(G.n_arr):
        for h in range(G.n_arr):
            c = G.comp[g][h]
            if c != UNDEF:
                mult[(g, h)] = {c: ONE}
    invol = tuple({G.inv[g]: ONE} for g in range(G.n_arr))
    return FinCStar(G.n_arr, mult, invol, label=f"C*({G.name})" if G.name else "C*(G)")


def matrix_algebra(n: int) -> FinCStar:
    """``Mat(n)`` with basis the matrix units ``E_ab`` (index ``a*n + b``)."""
    A = convolution_algebra(pair_groupoid(n))
    A.label = f"Mat({n})"
    return A


def scalars() -> FinCStar:
    A = convolution_algebra(pair_groupoid(1))
    A.label = "C"
    return A


def direct_sum_algebra(A: FinCStar, B: FinCStar) -> FinCStar:
    da = A.dim
    mult = {k: dict(v) for k, v in A.mult.items()}
    for (i, j), v in B.mult.items():
        mult[(da + i, da + j)] = {da + k: c for k, c in v.items()}
    invol = tuple(dict(v) for v in A.invol) + tuple({da + k: c for k, c in v.items()} for v in B.invol)
    return FinCStar(da + B.dim, mult, invol, label=f"{A.label}+{B.label}")


# -- Wedderburn -------------------------------------------------------------

@dataclass(frozen=True)
class Wedderburn:
    """Block form of a finite-dimensional C*-algebra.

    ``images[b][i]`` is the ``n_b x n_b`` matrix of basis element ``e_i`` in
    block ``b``; ``inverse`` maps stacked flattened blocks back to coordinates.
    """

    dimension_vector: tuple[int, ...]
    images: tuple[np.ndarray, ...]
    inverse: np.ndarray
    residual: float

    @property
    def n_blocks(self) -> int:
        return len(self.dimension_vector)

    def embed(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.asarray(x, dtype=complex)
        return [np.tensordot(x, img, axes=1) for img in self.images]

    def element(self, blocks: list[np.ndarray]) -> np.ndarray:
        flat = np.concatenate([np.asarray(b, dtype=complex).ravel() for b in blocks])
        return self.inverse @ flat

    def _block_element(self, b: int, mat: np.ndarray) -> np.ndarray:
        mats = [np.zeros((n, n), dtype=complex) for n in self.dimension_vector]
        mats[b] = mat
        return self.element(mats)

    def matrix_unit(self, b: int, k: int, l: int) -> np.ndarray:
        n = self.dimension_vector[b]
        m = np.zeros((n, n), dtype=complex)
        m[k, l] = 1.0
        return self._block_element(b, m)

    def central_projection(self, b: int) -> np.ndarray:
        return self._block_element(b, np.eye(self.dimension_vector[b]))

    def minimal_projection(self, b: int) -> np.ndarray:
        return self.matrix_unit(b, 0, 0)


def _clusters(w: np.ndarray, gap: float) -> list[np.ndarray]:
    order = np.argsort(w)
    ws = w[order]
    cuts = [0] + [i + 1 for i in range(len(ws) - 1) if ws[i + 1] - ws[i] > gap] + [len(ws)]
    return [order[a:b] for a, b in zip(cuts, cuts[1:])]


def _wedderburn(A: FinCStar, seed: int, tol: float) -> Wedderburn:
    d = A.dim
    basis = [{i: ONE} for i in range(d)]
    # Radical of the trace form = Jacobson radical (characteristic zero).
    tform = [{j: A.trace(A.product(basis[i], basis[j])) for j in range(d)} for i in range(d)]
    tform = [{j: c for j, c in row.items() if c} for row in tform]
    rad = nullspace(tform, d)
    if rad:
        raise NotSemisimpleError(f"{A.label or 'algebra'} is not semisimple", rad[0])
    gram = np.zeros((d, d), dtype=complex)
    for i in range(d):
        si = A.invol[i]
        for j in range(d):
            gram[i, j] = to_complex(A.trace(A.product(si, basis[j])))
    try:
        chol = np.linalg.cholesky(gram)  # gram = chol chol^H
    except np.linalg.LinAlgError as exc:
        raise NotCStarError(f"{A.label or 'algebra'}: tau(x* y) is not positive definite") from exc
    ct = chol.conj().T
    ct_inv = scipy.linalg.solve_triangular(ct, np.eye(d), lower=False)
    T = A.dense_mult()
    Ls =np.stack([ct @ T[i].T @ ct_inv for i in range(d)])  # L~(e_i)
    Rs = np.stack([ct @ T[:, j, :].T @ ct_inv for j in range(d)])  # R~(e_j)
    center = np.array([sp_dense(z, d) for z in A.center()])
    k = len(center)
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.abs(Ls).max()))
    gap = 1e-6 * scale
    for _attempt in range(12):
        z = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) @ center
        h = z + A.star_vector(z)
        Lh = np.tensordot(h, Ls, axes=1)
        Lh = (Lh + Lh.conj().T) / 2
        w, vecs = np.linalg.eigh(Lh)
        groups = _clusters(w, gap)
        sizes = [len(g) for g in groups]
        ns = [int(round(np.sqrt(s))) for s in sizes]
        if len(groups) != k or any(n * n != s for n, s in zip(ns, sizes)):
            continue
        r = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = r + A.star_vector(r)
        Rb = np.tensordot(b, Rs, axes=1)
        blocks = []
        ok = True
        for g, n, lam in zip(groups, ns, [w[g].mean() for g in groups]):
            W = vecs[:, g]
            Rw = W.conj().T @ Rb @ W
            Rw = (Rw + Rw.conj().T) / 2
            wr, vr = np.linalg.eigh(Rw)
            sub = _clusters(wr, gap)
            if len(sub) != n or any(len(s) != n for s in sub):
                ok = False
                break
            V = W @ vr[:, sub[0]]
            img = np.stack([V.conj().T @ Ls[i] @ V for i in range(d)])
            blocks.append((-n, lam, img))
        if not ok:
            continue
        blocks.sort(key=lambda t: (t[0], t[1]))
        images = tuple(t[2] for t in blocks)
        dimvec = tuple(-t[0] for t in blocks)
        phi = np.concatenate([img.reshape(d, -1) for img in images], axis=1)  # (d, sum n^2)
        if phi.shape[1] != d:
            continue
        inverse = np.linalg.inv(phi.T)
        resid = _embed_residual(A, images)
        if resid > tol * max(1.0, scale):
            continue
        return Wedderburn(dimvec, images, inverse, resid)
    raise RuntimeError(f"Wedderburn decomposition of {A.label or 'algebra'} did not stabilise")


def _embed_residual(A: FinCStar, images: tuple[np.ndarray, ...]) -> float:
    T = A.dense_mult()
    S = A.dense_invol()
    worst = 0.0
    for img in images:
        prod = np.einsum("iab,jbc->ijac", img, img)
        lin = np.einsum("ijk,kac->ijac", T, img)
        worst = max(worst, float(np.abs(prod - lin).max()))
        star_img = np.einsum("ki,kab->iab", S, img)  # image of e_i*
        adj = img.conj().transpose(0, 2, 1)
        worst = max(worst, float(np.abs(star_img - adj).max()))
    return worst


def wedderburn(A: FinCStar, seed: int = 0) -> tuple[tuple[int, ...], Wedderburn]:
    """``(dimension_vector, embedding)``; memoised per algebra instance."""
    W = A.wedderburn(seed)
    return W.dimension_vector, W


def operator_norm(A: FinCStar, x) -> float:
    """C*-norm: largest spectral norm over the Wedderburn blocks."""
    W = A.wedderburn()
    return max(float(np.linalg.norm(b, 2)) if b.size else 0.0 for b in W.embed(A.as_vector(x)))


def canonical_bimodule(A: FinCStar):
    """``A`` as an ``A``-``A`` Hilbert bimodule with ``<a, b> = a* b``."""
    from .hilbmod import make_bimodule

    d = A.dim
    lact = {(i, p): dict(v) for (i, p), v in A.mult.items() if v}
    ract = {(p, j): dict(v) for (p, j), v in A.mult.items() if v}
    ip = {}
    for p in range(d):
        sp = A.invol[p]
        for q in range(d):
            v = A.product(sp, {q: ONE})
            if v:
                ip[(p, q)] = v
    return make_bimodule(A, A, d, lact, ract, ip, label=f"{A.label}")
