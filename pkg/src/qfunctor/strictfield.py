"""Fuzzy-torus strict quantization of the 2-torus at ``hbar = 1/q``.

Symbols are trigonometric polynomials ``sum c_{m,n} e_{m,n}`` with
``e_{m,n}(x, y) = exp(2 pi i (m x + n y))``.  The fiber at ``hbar = 1/q`` is
``Mat(q)`` with clock ``U`` and shift ``V`` (``U V = exp(2 pi i/q) V U``) and

    Q(e_{m,n}) = exp(-pi i m n / q) U^m V^n.

The Poisson bracket is ``{e_a, e_b} = -2 pi (m n' - n m') e_{a+b}``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

MAX_Q = 512


@dataclass(frozen=True, eq=False)
class TrigPoly:
    terms: Mapping[tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (m, n), c in self.terms.items():
            c = complex(c)
            if c != 0:
                clean[(int(m), int(n))] = clean.get((int(m), int(n)), 0) + c
        object.__setattr__(self, "terms", {k: v for k, v in clean.items() if v != 0})

    @classmethod
    def mode(cls, m: int, n: int, c: complex = 1.0) -> "TrigPoly":
        return cls({(m, n): c})

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TrigPoly(out)

    def __mul__(self, other: "TrigPoly") -> "TrigPoly":
        """Pointwise product."""
        out: dict[tuple[int, int], complex] = {}
        for (m1, n1), c1 in self.terms.items():
            for (m2, n2), c2 in other.terms.items():
                k = (m1 + m2, n1 + n2)
                out[k] = out.get(k, 0) + c1 * c2
        return TrigPoly(out)

    def scale(self, c: complex) -> "TrigPoly":
        return TrigPoly({k: c * v for k, v in self.terms.items()})

    def conj(self) -> "TrigPoly":
        """Pointwise complex conjugate: ``conj(e_{m,n}) = e_{-m,-n}``."""
        return TrigPoly({(-m, -n): np.conj(c) for (m, n), c in self.terms.items()})

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c - np.conj(self.terms.get((-m, -n), 0))) <= tol for (m, n), c in self.terms.items())

    def __call__(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for (m, n), c in self.terms.items():
            out = out + c * np.exp(2j * np.pi * (m * x + n * y))
        return out

    def max_mode(self) -> int:
        return max((max(abs(m), abs(n)) for m, n in self.terms), default=0)


def torus_bracket(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    out: dict[tuple[int, int], complex] = {}
    for (m1, n1), c1 in f.terms.items():
        for (m2, n2), c2 in g.terms.items():
            w = m1 * n2 - n1 * m2
            if w:
                k = (m1 + m2, n1 + n2)
                out[k] = out.get(k, 0) + (-2 * np.pi * w) * c1 * c2
    return TrigPoly(out)


@dataclass(frozen=True, eq=False)
class FuzzyRep:
    q: int
    U: np.ndarray
    V: np.ndarray

    @property
    def hbar(self) -> float:
        return 1.0 / self.q

    def mode(self, m: int, n: int) -> np.ndarray:
        """``exp(-pi i m n / q) U^m V^n``; negative powers are adjoints."""
        q = self.q
        # U^m is diagonal, V^n is a cyclic shift by n
        u = np.exp(2j * np.pi * (np.arange(q) * m % q) / q)
        Vn = np.roll(np.eye(q), n % q, axis=0)
        return np.exp(-1j * np.pi * m * n / q) * (u[:, None] * Vn)

    def quantize(self, f: TrigPoly) -> np.ndarray:
        out = np.zeros((self.q, self.q), dtype=complex)
        for (m, n), c in f.terms.items():
            out += c * self.mode(m, n)
        return out

    def relation_defect(self) -> float:
        w = np.exp(2j * np.pi / self.q)
        return float(np.abs(self.U @ self.V - w * self.V @ self.U).max())


@lru_cache(maxsize=64)
def fuzzy_rep(q: int) -> FuzzyRep:
    if q < 2:
        raise ValueError("fuzzy torus needs q >= 2")
    if q > MAX_Q:
        raise ValueError(f"q capped at {MAX_Q}")
    U = np.diag(np.exp(2j * np.pi * np.arange(q) / q))
    V = np.roll(np.eye(q, dtype=complex), 1, axis=0)  # V e_k = e_{k+1}
    U.setflags(write=False)
    V.setflags(write=False)
    return FuzzyRep(q, U, V)


def operator_norm(X: np.ndarray) -> float:
    """Largest singular value via ``eigvalsh(X^* X)``."""
    ev = np.linalg.eigvalsh(X.conj().T @ X)
    return float(np.sqrt(max(ev[-1], 0.0)))


def dirac_defect(f: TrigPoly, g: TrigPoly, q: int) -> float:
    """``|| (i/hbar)[Q f, Q g] - Q {f, g} ||`` at ``hbar = 1/q``."""
    R = fuzzy_rep(q)
    Qf, Qg = R.quantize(f), R.quantize(g)
    D = 1j * q * (Qf @ Qg - Qg @ Qf) - R.quantize(torus_bracket(f, g))
    return operator_norm(D)


def sup_norm(f: TrigPoly, tol: float = 1e-6, start: int = 16, max_grid: int = 4096) -> float:
    """``max |f|`` on the torus: grid doubling plus local refinement until stable to ``tol``."""
    if not f.terms:
        return 0.0

    def neg_abs(z):
        return -float(abs(f(z[0], z[1])))

    prev = None
    n = max(start, 4 * f.max_mode() + 4)
    while True:
        xs = np.arange(n) / n
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        vals = np.abs(f(X, Y))
        best = float(vals.max())
        # refine from the best few grid points
        flat = np.argsort(vals, axis=None)[-5:]
        for idx in flat:
            i, j = np.unravel_index(idx, vals.shape)
            res = minimize(neg_abs, x0=[xs[i], xs[j]], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
            best = max(best, -float(res.fun))
        if prev is not None and abs(best - prev) <= tol:
            return best
        if n >= max_grid:
            return best
        prev = best
        n *= 2


def norm_section(f: TrigPoly, q_list: Iterable[int], workers: int | None = None) -> list[tuple[float, float]]:
    """``[(1/q, ||Q_{1/q} f||) ...] + [(0, sup |f|)]``."""
    qs = list(q_list)
    if not qs:
        raise ValueError("q_list must be nonempty")

    def one(q):
        return (1.0 / q, operator_norm(fuzzy_rep(q).quantize(f)))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(one, qs))
    return rows + [(0.0, sup_norm(f))]


@dataclass
class StrictField:
    """Sampled section ``hbar -> Q_hbar(f)`` with the symbol itself at ``hbar = 0``."""

    symbol: TrigPoly
    qs: tuple[int, ...]
    fibers: dict[int, np.ndarray]
    zero_norm: float

    @classmethod
    def build(cls, f: TrigPoly, qs: Sequence[int]) -> "StrictField":
        fibers = {q: fuzzy_rep(q).quantize(f) for q in qs}
        return cls(f, tuple(qs), fibers, sup_norm(f))

    def override(self, q: int, matrix: np.ndarray) -> "StrictField":
        fibers = dict(self.fibers)
        fibers[q] = np.asarray(matrix, dtype=complex)
        return StrictField(self.symbol, self.qs, fibers, self.zero_norm)

    def norms(self) -> list[tuple[float, float]]:
        """Sorted by decreasing ``hbar``; the ``hbar = 0`` entry last."""
        rows = [(1.0 / q, operator_norm(self.fibers[q])) for q in sorted(self.qs)]
        return rows + [(0.0, self.zero_norm)]


@dataclass
class USCReport:
    ok: bool
    epsilon: float
    zero_norm: float
    level_set: list[float]
    witnesses: list[dict]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "epsilon": self.epsilon,
            "zero_norm": self.zero_norm,
            "level_set": self.level_set,
            "witnesses": self.witnesses,
        }


def usc_check(sf: StrictField, eps: float, gap: float = 1e-3, tail: int = 3) -> USCReport:
    """Finite surrogate of compactness of ``{hbar : ||f_hbar|| >= eps}``.

    Flags (a) a run of the ``tail`` smallest sampled ``hbar`` with norms
    ``>= eps + gap`` while the fiber at 0 has norm ``< eps`` (the level set
    would not be closed at 0), and (b) isolated drops: a sample below ``eps``
    whose neighbours are both ``>= eps + gap``.
    """
    rows = sf.norms()
    fiber_rows = rows[:-1]
    zero = rows[-1][1]
    witnesses: list[dict] = []
    level = [h for h, v in rows if v >= eps]
    by_small_h = sorted(fiber_rows, key=lambda r: r[0])[:tail]
    if zero < eps and by_small_h and all(v >= eps + gap for _, v in by_small_h):
        witnesses.append({"kind": "escape to 0", "samples": [[h, v] for h, v in by_small_h], "zero_norm": zero})
    ordered = sorted(rows, key=lambda r: r[0])
    for k in range(1, len(ordered) - 1):
        (h0, v0), (h1, v1), (h2, v2) = ordered[k - 1], ordered[k], ordered[k + 1]
        if v1 < eps and v0 >= eps + gap and v2 >= eps + gap:
            witnesses.append({"kind": "isolated drop", "hbar": h1, "norm": v1, "neighbours": [[h0, v0], [h2, v2]]})
    return USCReport(not witnesses, eps, zero, level, witnesses)


def decay_slope(f: TrigPoly, g: TrigPoly, qs: Sequence[int]) -> tuple[float, list[float]]:
    """Least-squares slope ``s`` in ``log defect = c - s log q``."""
    d = [dirac_defect(f, g, q) for q in qs]
    x = np.log(np.asarray(qs, dtype=float))
    y = np.log(np.asarray(d))
    slope = -float(np.polyfit(x, y, 1)[0])
    return slope, d


def random_trig(rng: np.random.Generator, max_mode: int = 2, n_terms: int = 3, real: bool = False) -> TrigPoly:
    terms: dict[tuple[int, int], complex] = {}
    while len(terms) < n_terms:
        m, n = (int(v) for v in rng.integers(-max_mode, max_mode + 1, size=2))
        if (m, n) == (0, 0):
            continue
        terms[(m, n)] = complex(rng.normal(), rng.normal())
    f = TrigPoly(terms)
    if real:
        f = (f + f.conj()).scale(0.5)
    return f


def parse_trig(text: str) -> TrigPoly:
    """Parse ``c1*e(m1,n1) + c2*e(m2,n2) ...``; ``c`` is a Python complex literal (``1``, ``-0.5``, ``2j``, ``(1+2j)``)."""
    import re

    pat = re.compile(r"\s*([+-])?\s*(?:(\(?[-+0-9.eEj ]+\)?)\s*\*\s*)?e\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*")
    pos, terms = 0, {}
    text = text.strip()
    while pos < len(text):
        m = pat.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse trig polynomial at column {pos + 1}: {text!r}")
        sign, coeff, mm, nn = m.groups()
        c = complex(coeff.replace(" ", "")) if coeff else 1.0
        if sign == "-":
            c = -c
        key = (int(mm), int(nn))
        terms[key] = terms.get(key, 0) + c
        pos = m.end()
    return TrigPoly(terms)
