"""Formal Moyal star product on polynomial symbols over ``T*(R^n)``.

Variables are ordered ``(q_1..q_n, p_1..p_n)``.  The star product is

    f * g = sum_k hbar^k (-i/2)^k sum_{|a|+|b|=k} (-1)^|b| / (a! b!)
            (d_q^a d_p^b f) (d_p^a d_q^b g)

so that ``f*g - g*f = -i hbar {f, g} + O(hbar^3)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exact import ONE, ZERO, I, Scalar, conj, gauss

Exponent = tuple[int, ...]

DEFAULT_K = 5


class NotSymplecticError(ValueError):
    def __init__(self, defect):
        super().__init__(f"S^T J S - J is nonzero: {defect}")
        self.defect = defect


class PolyParseError(ValueError):
    def __init__(self, text: str, pos: int, msg: str):
        super().__init__(f"{msg} at column {pos + 1}: {text!r}")
        self.pos = pos


@dataclass(frozen=True, eq=False)
class PhasePoly:
    n: int
    terms: Mapping[Exponent, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for e, c in self.terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != 2 * self.n or min(e, default=0) < 0:
                raise ValueError(f"exponent {e} does not fit n = {self.n}")
            c = gauss(c)
            if c:
                clean[e] = clean.get(e, ZERO) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c})

    # constructors
    @classmethod
    def const(cls, n: int, c=1) -> "PhasePoly":
        return cls(n, {(0,) * (2 * n): gauss(c)})

    @classmethod
    def var(cls, n: int, k: int) -> "PhasePoly":
        """``k``-th coordinate in ``(q_1..q_n, p_1..p_n)`` order."""
        e = [0] * (2 * n)
        e[k] = 1
        return cls(n, {tuple(e): ONE})

    @classmethod
    def q(cls, n: int, i: int) -> "PhasePoly":
        return cls.var(n, i)

    @classmethod
    def p(cls, n: int, i: int) -> "PhasePoly":
        return cls.var(n, n + i)

    # ring structure
    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) or isinstance(other, Scalar):
            other = PhasePoly.const(self.n, other)
        return isinstance(other, PhasePoly) and self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "PhasePoly") -> None:
        if self.n != other.n:
            raise ValueError(f"degrees of freedom differ: {self.n} vs {other.n}")

    def __add__(self, other: "PhasePoly") -> "PhasePoly":
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return PhasePoly(self.n, out)

    def __neg__(self) -> "PhasePoly":
        return PhasePoly(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "PhasePoly") -> "PhasePoly":
        return self + (-other)

    def scale(self, c) -> "PhasePoly":
        c = gauss(c)
        return PhasePoly(self.n, {e: c * x for e, x in self.terms.items()})

    def __mul__(self, other: "PhasePoly") -> "PhasePoly":
        """Pointwise (commutative) product."""
        self._check(other)
        out: dict[Exponent, Scalar] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        return PhasePoly(self.n, out)

    def conj(self) -> "PhasePoly":
        return PhasePoly(self.n, {e: conj(c) for e, c in self.terms.items()})

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def diff(self, k: int, times: int = 1) -> "PhasePoly":
        out = {}
        for e, c in self.terms.items():
            if e[k] < times:
                continue
            f = factorial(e[k]) // factorial(e[k] - times)
            e2 = list(e)
            e2[k] -= times
            out[tuple(e2)] = c * f
        return PhasePoly(self.n, out)

    def evaluate(self, z: Sequence[complex]) -> complex:
        return sum(complex(float(c.x), float(c.y)) * np.prod([z[k] ** a for k, a in enumerate(e)]) for e, c in self.terms.items())

    def __repr__(self) -> str:
        return f"PhasePoly({format_poly(self)!r})"


def _power(base: PhasePoly, k: int, cache: dict) -> PhasePoly:
    key = (id(base), k)
    if key not in cache:
        cache[key] = PhasePoly.const(base.n) if k == 0 else _power(base, k - 1, cache) * base
    return cache[key]


def poisson_bracket(f: PhasePoly, g: PhasePoly) -> PhasePoly:
    """``sum_i df/dq_i dg/dp_i - df/dp_i dg/dq_i``."""
    f._check(g)
    n = f.n
    out = PhasePoly(n)
    for i in range(n):
        out = out + f.diff(i) * g.diff(n + i) - f.diff(n + i) * g.diff(i)
    return out


# -- formal series ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FormalSeries:
    """``sum_k hbar^k coeffs[k]`` modulo ``hbar^(K+1)``."""

    n: int
    K: int
    coeffs: tuple[PhasePoly, ...]

    @classmethod
    def make(cls, n: int, K: int, coeffs: Iterable[PhasePoly]) -> "FormalSeries":
        cs = list(coeffs)[: K + 1]
        cs += [PhasePoly(n)] * (K + 1 - len(cs))
        return cls(n, K, tuple(cs))

    @classmethod
    def lift(cls, f: PhasePoly, K: int = DEFAULT_K) -> "FormalSeries":
        return cls.make(f.n, K, [f])

    def coeff(self, k: int) -> PhasePoly:
        return self.coeffs[k] if k <= self.K else PhasePoly(self.n)

    def _check(self, other: "FormalSeries") -> None:
        if (self.n, self.K) != (other.n, other.K):
            raise ValueError("series with different n or truncation order")

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        self._check(other)
        return FormalSeries(self.n, self.K, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "FormalSeries":
        return FormalSeries(self.n, self.K, tuple(-a for a in self.coeffs))

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return self + (-other)

    def __eq__(self, other) -> bool:
        return isinstance(other, FormalSeries) and self.n == other.n and self.K == other.K and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.n, self.K, self.coeffs))

    def truncate(self, K: int) -> "FormalSeries":
        return FormalSeries.make(self.n, K, self.coeffs[: K + 1])

    def conj(self) -> "FormalSeries":
        """Coefficientwise conjugate; ``hbar`` is real."""
        return FormalSeries(self.n, self.K, tuple(c.conj() for c in self.coeffs))

    def compose(self, S, v) -> "FormalSeries":
        return FormalSeries(self.n, self.K, tuple(compose_affine(c, S, v) for c in self.coeffs))

    def to_json(self) -> list[str]:
        return [format_poly(c) for c in self.coeffs]


# -- star product -----------------------------------------------------------

def _multi_indices(n: int, total: int):
    """All ``a`` in ``N^n`` with ``|a| = total``."""
    if n == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _multi_indices(n - 1, total - first):
            yield (first,) + rest


def _falling(e: int, k: int) -> int:
    return factorial(e) // factorial(e - k) if k <= e else 0


_MINUS_HALF_I = gauss(0, Fraction(-1, 2))


@lru_cache(maxsize=1 << 16)
def _mono_star(e1: Exponent, e2: Exponent, k: int) -> tuple[tuple[Exponent, Scalar], ...]:
    """Order-``k`` bidifferential term on a pair of monomials."""
    n = len(e1) // 2
    pref = ONE
    for _ in range(k):
        pref = pref * _MINUS_HALF_I
    out: dict[Exponent, Scalar] = {}
    for ka in range(k + 1):
        for a in _multi_indices(n, ka):
            for b in _multi_indices(n, k - ka):
                # f gets d_q^a d_p^b, g gets d_p^a d_q^b
                cf = 1
                for i in range(n):
                    cf *= _falling(e1[i], a[i]) * _falling(e1[n + i], b[i])
                    cf *= _falling(e2[n + i], a[i]) * _falling(e2[i], b[i])
                if not cf:
                    continue
                den = 1
                for x in a + b:
                    den *= factorial(x)
                sign = -1 if sum(b) % 2 else 1
                e = tuple(
                    [e1[i] - a[i] + e2[i] - b[i] for i in range(n)]
                    + [e1[n + i] - b[i] + e2[n + i] - a[i] for i in range(n)]
                )
                out[e] = out.get(e, ZERO) + gauss(Fraction(sign * cf, den))
    return tuple((e, pref * c) for e, c in out.items() if c)


def star_term(f: PhasePoly, g: PhasePoly, k: int) -> PhasePoly:
    """Coefficient of ``hbar^k`` in ``f * g``."""
    f._check(g)
    out: dict[Exponent, Scalar] = {}
    for e1, c1 in f.terms.items():
        for e2, c2 in g.terms.items():
            c = c1 * c2
            for e, x in _mono_star(e1, e2, k):
                out[e] = out.get(e, ZERO) + c * x
    return PhasePoly(f.n, out)


def star_series(F: FormalSeries, G: FormalSeries) -> FormalSeries:
    """Bilinear extension of the star product to truncated series."""
    F._check(G)
    K = F.K
    coeffs = [PhasePoly(F.n) for _ in range(K + 1)]
    for i, fi in enumerate(F.coeffs):
        if fi.is_zero():
            continue
        for j, gj in enumerate(G.coeffs[: K + 1 - i]):
            if gj.is_zero():
                continue
            for k in range(K + 1 - i - j):
                coeffs[i + j + k] = coeffs[i + j + k] + star_term(fi, gj, k)
    return FormalSeries(F.n, K, tuple(coeffs))


def _as_series(x, K: int) -> FormalSeries:
    if isinstance(x, FormalSeries):
        return x if x.K == K else x.truncate(K)
    return FormalSeries.lift(x, K)


def star(f, g, K: int = DEFAULT_K) -> FormalSeries:
    """``f * g`` modulo ``hbar^(K+1)``; accepts polynomials or series."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    return star_series(_as_series(f, K), _as_series(g, K))


def commutator(f, g, K: int = DEFAULT_K) -> FormalSeries:
    return star(f, g, K) - star(g, f, K)


def check_dirac(f: PhasePoly, g: PhasePoly) -> bool:
    """``hbar^1`` coefficient of ``f*g - g*f`` equals ``-i {f, g}`` (and the ``hbar^0`` part vanishes)."""
    c = commutator(f, g, K=1)
    return c.coeff(0).is_zero() and c.coeff(1) == poisson_bracket(f, g).scale(-I)


def check_classical_limit(f: PhasePoly, g: PhasePoly) -> bool:
    return star(f, g, K=0).coeff(0) == f * g


def check_associativity(f, g, h, K: int = DEFAULT_K) -> bool:
    return star(star(f, g, K), h, K) == star(f, star(g, h, K), K)


def check_hermiticity(f: PhasePoly, g: PhasePoly, K: int = DEFAULT_K) -> bool:
    return star(f, g, K).conj() == star(g.conj(), f.conj(), K)


def check_unit(f: PhasePoly, K: int = DEFAULT_K) -> bool:
    one = PhasePoly.const(f.n)
    F = FormalSeries.lift(f, K)
    return star(one, f, K) == F and star(f, one, K) == F


# -- affine symplectic maps -------------------------------------------------

def _fraction_matrix(S) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in S]


def symplectic_form(n: int) -> list[list[Fraction]]:
    J = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        J[i][n + i] = Fraction(1)
        J[n + i][i] = Fraction(-1)
    return J


def symplectic_defect(S) -> list[list[Fraction]]:
    """``S^T J S - J``."""
    S = _fraction_matrix(S)
    m = len(S)
    if m % 2 or any(len(r) != m for r in S):
        raise ValueError("S must be a square matrix of even size")
    J = symplectic_form(m // 2)
    JS = [[sum(J[i][k] * S[k][j] for k in range(m)) for j in range(m)] for i in range(m)]
    return [[sum(S[k][i] * JS[k][j] for k in range(m)) - J[i][j] for j in range(m)] for i in range(m)]


def require_symplectic(S) -> None:
    D = symplectic_defect(S)
    if any(x for row in D for x in row):
        raise NotSymplecticError([[str(x) for x in row] for row in D])


def compose_affine(f: PhasePoly, S, v) -> PhasePoly:
    """``f o L`` with ``L(z) = S z + v``."""
    S = _fraction_matrix(S)
    v = [Fraction(x) for x in v]
    n = f.n
    m = 2 * n
    if len(S) != m or len(v) != m:
        raise ValueError(f"affine map must act on R^{m}")
    images = []
    for i in range(m):
        terms = {(0,) * m: gauss(v[i])}
        for j in range(m):
            if S[i][j]:
                e = [0] * m
                e[j] = 1
                terms[tuple(e)] = terms.get(tuple(e), ZERO) + gauss(S[i][j])
        images.append(PhasePoly(n, terms))
    cache: dict = {}
    out = PhasePoly(n)
    for e, c in f.terms.items():
        term = PhasePoly.const(n, c)
        for i, a in enumerate(e):
            if a:
                term = term * _power(images[i], a, cache)
        out = out + term
    return out


def affine_covariance(f, g, S, v, K: int = DEFAULT_K) -> bool:
    """``(f o L) * (g o L) == (f * g) o L`` for affine symplectic ``L``."""
    require_symplectic(S)
    lhs = star(compose_affine(f, S, v), compose_affine(g, S, v), K)
    rhs = star(f, g, K).compose(S, v)
    return lhs == rhs


# -- random data ------------------------------------------------------------

def random_poly(rng: np.random.Generator, n: int, max_degree: int = 4, n_terms: int = 4, complex_coeffs: bool = True) -> PhasePoly:
    terms = {}
    for _ in range(n_terms):
        deg = int(rng.integers(0, max_degree + 1))
        e = [0] * (2 * n)
        for _ in range(deg):
            e[int(rng.integers(2 * n))] += 1
        re_ = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
        im_ = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4))) if complex_coeffs else 0
        terms[tuple(e)] = gauss(re_, im_)
    return PhasePoly(n, terms)


def _elementary_symplectic(rng: np.random.Generator, n: int) -> list[list[Fraction]]:
    m = 2 * n
    S = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    kind = int(rng.integers(4))
    if kind in (0, 1):
        # shear by a symmetric rational block
        A = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                A[i][j] = A[j][i] = Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3)))
        for i in range(n):
            for j in range(n):
                if kind == 0:
                    S[i][n + j] = A[i][j]
                else:
                    S[n + i][j] = A[i][j]
    elif kind == 2:
        # diag(B, B^-T) with B elementary
        i, j = (int(x) for x in rng.choice(n, size=2, replace=True))
        B = [[Fraction(int(a == b)) for b in range(n)] for a in range(n)]
        if i == j:
            B[i][i] = Fraction(int(rng.choice([-3, -2, -1, 2, 3])), int(rng.integers(1, 3)))
        else:
            B[i][j] = Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3)))
        Binv_T = _inverse_transpose(B)
        for a in range(n):
            for b in range(n):
                S[a][b] = B[a][b]
                S[n + a][n + b] = Binv_T[a][b]
    else:
        # rotation (q_i, p_i) -> (p_i, -q_i) in one plane
        i = int(rng.integers(n))
        S[i][i] = S[n + i][n + i] = Fraction(0)
        S[i][n + i] = Fraction(1)
        S[n + i][i] = Fraction(-1)
    return S


def _inverse_transpose(B: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(B)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(B)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                fac = aug[r][col]
                aug[r] = [x - fac * y for x, y in zip(aug[r], aug[col])]
    inv = [row[n:] for row in aug]
    return [[inv[j][i] for j in range(n)] for i in range(n)]


def random_symplectic(rng: np.random.Generator, n: int, length: int = 3) -> list[list[Fraction]]:
    """Product of ``length`` elementary symplectic generators."""
    m = 2 * n
    S = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    for _ in range(length):
        E = _elementary_symplectic(rng, n)
        S = [[sum(S[i][k] * E[k][j] for k in range(m)) for j in range(m)] for i in range(m)]
    return S


def random_vector(rng: np.random.Generator, n: int) -> list[Fraction]:
    return [Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3))) for _ in range(2 * n)]


# -- literals ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<var>[qp]\d*)|(?P<imag>[iI])(?![a-zA-Z])|(?P<op>[-+*^()]))"
)


def parse_poly(text: str, n: int | None = None) -> PhasePoly:
    """Parse sums of terms such as ``3/2*q1^2*p1 - i*p2 + 4``.

    ``q``/``p`` without an index mean ``q1``/``p1``.  Factors may be separated
    by ``*`` or whitespace; ``i`` is the imaginary unit.
    """
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolyParseError(text, pos, "unexpected character")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    idxs = [int(v[1:] or 1) for k, v, _ in tokens if k == "var"]
    if any(i < 1 for i in idxs):
        raise PolyParseError(text, 0, "variable indices start at 1")
    nn = n if n is not None else max(idxs, default=1)
    if idxs and max(idxs) > nn:
        raise PolyParseError(text, 0, f"variable index exceeds n = {nn}")
    terms: dict[Exponent, Scalar] = {}
    k = 0

    def peek():
        return tokens[k] if k < len(tokens) else ("end", "", len(text))

    while True:
        sign = 1
        while peek()[0] == "op" and peek()[1] in "+-":
            if peek()[1] == "-":
                sign = -sign
            k += 1
        coeff = gauss(sign)
        e = [0] * (2 * nn)
        factors = 0
        while True:
            kind, val, at = peek()
            if kind == "num":
                coeff = coeff * gauss(Fraction(val))
            elif kind == "imag":
                coeff = coeff * I
            elif kind == "op" and val == "(":
                depth, j = 0, k
                while j < len(tokens):
                    if tokens[j][1] == "(":
                        depth += 1
                    elif tokens[j][1] == ")":
                        depth -= 1
                        if depth == 0:
                            break
                    j += 1
                if j == len(tokens):
                    raise PolyParseError(text, at, "unbalanced parenthesis")
                inner = parse_poly(text[at + 1 : tokens[j][2]], nn)
                if set(inner.terms) - {(0,) * (2 * nn)}:
                    raise PolyParseError(text, at, "parenthesized groups must be constants")
                coeff = coeff * inner.terms.get((0,) * (2 * nn), ZERO)
                k = j
            elif kind == "var":
                idx = int(val[1:] or 1) - 1
                slot = idx if val[0] == "q" else nn + idx
                k += 1
                power = 1
                if peek()[0] == "op" and peek()[1] == "^":
                    k += 1
                    kind2, val2, at2 = peek()
                    if kind2 != "num" or "/" in val2:
                        raise PolyParseError(text, at2, "expected a nonnegative integer exponent")
                    power = int(val2)
                    k += 1
                e[slot] += power
                factors += 1
                if peek()[0] == "op" and peek()[1] == "*":
                    k += 1
                continue
            else:
                break
            k += 1
            factors += 1
            if peek()[0] == "op" and peek()[1] == "*":
                k += 1
        if factors == 0:
            raise PolyParseError(text, peek()[2], "expected a term")
        terms[tuple(e)] = terms.get(tuple(e), ZERO) + coeff
        kind, val, at = peek()
        if kind == "end":
            break
        if not (kind == "op" and val in "+-"):
            raise PolyParseError(text, at, f"unexpected {val!r}")
    return PhasePoly(nn, terms)


def _format_scalar(c: Scalar) -> str:
    re_, im_ = Fraction(int(c.x.numerator), int(c.x.denominator)), Fraction(int(c.y.numerator), int(c.y.denominator))
    if not im_:
        return str(re_)
    if not re_:
        return f"{im_}*i"
    return f"({re_}{'+' if im_ > 0 else '-'}{abs(im_)}*i)"


def format_poly(f: PhasePoly) -> str:
    if not f.terms:
        return "0"
    n = f.n
    names = [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
    out = ""
    for e in sorted(f.terms, key=lambda e: (sum(e), e)):
        c = f.terms[e]
        neg = not c.y and c.x < 0
        vs = [nm if a == 1 else f"{nm}^{a}" for nm, a in zip(names, e) if a]
        mag = -c if neg else c
        body = "*".join(([] if (mag == ONE and vs) else [_format_scalar(mag)]) + vs)
        if not out:
            out = ("-" if neg else "") + body
        else:
            out += (" - " if neg else " + ") + body
    return out
