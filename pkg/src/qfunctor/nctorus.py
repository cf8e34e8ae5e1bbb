"""Morita classes of irrational rotation algebras via quadratic irrationals.

Two rotation algebras ``A_theta`` are Morita equivalent iff ``theta`` and
``theta'`` lie in one ``GL(2,Z)`` orbit under Moebius maps, which for real
irrationals means their continued fractions share a tail.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from sympy import factorint


class NotQuadraticError(ValueError):
    pass


class NotACounterexample(ValueError):
    pass


def _squarefree_part(d: int) -> tuple[int, int]:
    """``d = k^2 * s`` with ``s`` squarefree; returns ``(k, s)``."""
    k, s = 1, 1
    for p, e in factorint(d).items():
        k *= p ** (e // 2)
        if e % 2:
            s *= p
    return k, s


@dataclass(frozen=True)
class QuadraticIrrational:
    """``(a + b*sqrt(d)) / c`` in lowest terms with ``c > 0`` and squarefree ``d > 1``."""

    a: int
    b: int
    c: int
    d: int

    @classmethod
    def make(cls, a: int, b: int, c: int, d: int) -> "QuadraticIrrational":
        a, b, c, d = int(a), int(b), int(c), int(d)
        if c == 0:
            raise ZeroDivisionError("denominator c must be nonzero")
        if d < 2:
            raise NotQuadraticError(f"d = {d} gives a rational number")
        k, d = _squarefree_part(d)
        b *= k
        if d == 1 or b == 0:
            raise NotQuadraticError("value is rational; rational rotation algebras are excluded")
        if c < 0:
            a, b, c = -a, -b, -c
        g = gcd(gcd(a, b), c)
        return cls(a // g, b // g, c // g, d)

    @classmethod
    def from_parts(cls, r: Fraction, s: Fraction, d: int) -> "QuadraticIrrational":
        """``r + s*sqrt(d)``."""
        den = r.denominator * s.denominator // gcd(r.denominator, s.denominator)
        return cls.make(int(r * den), int(s * den), den, d)

    @property
    def parts(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.a, self.c), Fraction(self.b, self.c)

    def __float__(self) -> float:
        return (self.a + self.b * self.d ** 0.5) / self.c

    def floor(self) -> int:
        # floor((a + b sqrt d)/c) with c > 0; b sqrt(d) = sign(b) sqrt(b^2 d)
        r = isqrt(self.b * self.b * self.d)
        if self.b > 0:
            num_lo = self.a + r  # a + b sqrt d in [num_lo, num_lo + 1)
        else:
            num_lo = self.a - r - 1  # irrational, so strictly inside (a-r-1, a-r)
        return num_lo // self.c

    def __add__(self, k: int) -> "QuadraticIrrational":
        return QuadraticIrrational.make(self.a + k * self.c, self.b, self.c, self.d)

    def __sub__(self, k: int) -> "QuadraticIrrational":
        return self + (-k)

    def reciprocal(self) -> "QuadraticIrrational":
        # c / (a + b sqrt d) = c (a - b sqrt d) / (a^2 - b^2 d)
        return QuadraticIrrational.make(self.c * self.a, -self.c * self.b, self.a * self.a - self.b * self.b * self.d, self.d)

    def mobius(self, m: tuple[tuple[int, int], tuple[int, int]]) -> "QuadraticIrrational":
        """``(p x + q) / (r x + s)`` for ``m = ((p, q), (r, s))``."""
        (p, q), (r, s) = m
        x, y = self.parts
        # numerator and denominator as u + v sqrt(d)
        nu, nv = p * x + q, p * y
        du, dv = r * x + s, r * y
        den = du * du - dv * dv * self.d
        ru = (nu * du - nv * dv * self.d) / den
        rv = (nv * du - nu * dv) / den
        return QuadraticIrrational.from_parts(ru, rv, self.d)

    def __str__(self) -> str:
        sign = "+" if self.b > 0 else "-"
        return f"({self.a}{sign}{abs(self.b)}*sqrt({self.d}))/{self.c}"


_LITERAL = re.compile(
    r"^\s*\(?\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)?\s*(?:/\s*([+-]?\d+))?\s*$"
)


def parse_quadratic(text: str) -> QuadraticIrrational:
    """Parse ``(a+b*sqrt(d))/c``; ``/c`` may be omitted."""
    m = _LITERAL.match(text)
    if not m:
        raise ValueError(f"expected (a+b*sqrt(d))/c, got {text!r}")
    a, sign, b, d, c = m.groups()
    bb = int(b) * (-1 if sign == "-" else 1)
    return QuadraticIrrational.make(int(a), bb, int(c or 1), int(d))


@dataclass(frozen=True)
class ContinuedFraction:
    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    def terms(self, n: int) -> list[int]:
        out = list(self.preperiod)
        while len(out) < n:
            out.extend(self.period)
        return out[:n]


def _minimal_period(p: tuple[int, ...]) -> tuple[int, ...]:
    n = len(p)
    for k in range(1, n + 1):
        if n % k == 0 and p == p[:k] * (n // k):
            return p[:k]
    return p


def continued_fraction(theta: QuadraticIrrational) -> ContinuedFraction:
    """Exact expansion with the ``(P + sqrt(D)) / Q`` recursion; stops at the first repeated state."""
    a, b, c, d = theta.a, theta.b, theta.c, theta.d
    # rewrite as (P + sqrt(D)) / Q with Q | D - P^2
    D = b * b * d
    P, Q = (a, c) if b > 0 else (-a, -c)
    # make Q | D - P^2 by scaling numerator and denominator by |Q|
    if (D - P * P) % Q:
        D *= Q * Q
        P *= abs(Q)
        Q *= abs(Q)
    seen: dict[tuple[int, int], int] = {}
    digits: list[int] = []
    r = isqrt(D)
    while (P, Q) not in seen:
        seen[(P, Q)] = len(digits)
        # floor((P + sqrt D) / Q) exactly; sqrt D irrational
        if Q > 0:
            k = (P + r) // Q
        else:
            k = (P + r + 1) // Q
        digits.append(k)
        P = k * Q - P
        Q = (D - P * P) // Q
    start = seen[(P, Q)]
    pre, per = tuple(digits[:start]), _minimal_period(tuple(digits[start:]))
    # the minimal period may let the preperiod shrink
    while pre and pre[-1] == per[-1]:
        pre, per = pre[:-1], (per[-1],) + per[:-1]
    return ContinuedFraction(pre, per)


def cf_value(cf: ContinuedFraction, d: int) -> QuadraticIrrational:
    """Exact value of an eventually periodic continued fraction in ``Q(sqrt d)``."""
    # purely periodic part y = [p0; p1, ..., y] solves a quadratic; compose convergent matrices
    p0, q0, p1, q1 = 1, 0, 0, 1  # matrix ((p0, p1), (q0, q1))
    for t in cf.period:
        p0, p1 = t * p0 + p1, p0
        q0, q1 = t * q0 + q1, q0
    # y = (p0 y + p1) / (q0 y + q1)  =>  q0 y^2 + (q1 - p0) y - p1 = 0, y > 1
    A, B, C = q0, q1 - p0, -p1
    disc = B * B - 4 * A * C
    k, s = _squarefree_part(disc)
    if s != d:
        raise ValueError(f"period lives in Q(sqrt {s}), not Q(sqrt {d})")
    y = QuadraticIrrational.make(-B, k, 2 * A, s)
    x = y
    for t in reversed(cf.preperiod):
        x = x.reciprocal() + t
    return x


def gl2z_equivalent(t1: QuadraticIrrational, t2: QuadraticIrrational) -> bool:
    """Common tail test: minimal periods agree up to cyclic rotation."""
    if t1.d != t2.d:
        return False
    p1 = continued_fraction(t1).period
    p2 = continued_fraction(t2).period
    if len(p1) != len(p2):
        return False
    return any(p2 == p1[i:] + p1[:i] for i in range(len(p1)))


_GENS: dict[str, tuple[tuple[int, int], tuple[int, int]]] = {
    "T": ((1, 1), (0, 1)),
    "T^-1": ((1, -1), (0, 1)),
    "S": ((0, 1), (1, 0)),
}

_INVERSE_NAME = {"T": "T^-1", "T^-1": "T", "S": "S"}


def _matmul(x, y):
    return (
        (x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
        (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]),
    )


def _adjugate(m):
    (p, q), (r, s) = m
    return ((s, -q), (-r, p))


@dataclass(frozen=True)
class Witness:
    """``matrix . t1 == t2``; ``word`` lists generators in the order they are applied."""

    matrix: tuple[tuple[int, int], tuple[int, int]]
    word: tuple[str, ...]


def find_witness(t1: QuadraticIrrational, t2: QuadraticIrrational, max_len: int = 12) -> Witness | None:
    """Meet-in-the-middle search over words in ``T, T^-1, S`` of length ``<= max_len``.

    Returns a matrix ``g`` with ``g . t1 == t2`` exactly, verified before returning.
    """
    if t1.d != t2.d:
        return None
    half = max_len // 2
    other = max_len - half

    def bfs(start: QuadraticIrrational, depth: int):
        seen = {start: ((((1, 0), (0, 1))), ())}
        frontier = deque([(start, 0)])
        while frontier:
            x, k = frontier.popleft()
            if k == depth:
                continue
            m, w = seen[x]
            for name, g in _GENS.items():
                y = x.mobius(g)
                if y not in seen:
                    seen[y] = (_matmul(g, m), w + (name,))
                    frontier.append((y, k + 1))
        return seen

    fwd = bfs(t1, half)
    bwd = bfs(t2, other)
    best = None
    for x, (m1, w1) in fwd.items():
        if x in bwd:
            m2, w2 = bwd[x]
            if best is None or len(w1) + len(w2) < len(best[1]):
                # t2 = m2^-1 m1 t1 ; inverse of a GL(2,Z) matrix is +-adjugate, same Moebius map
                best = (_matmul(_adjugate(m2), m1), w1 + tuple(_INVERSE_NAME[n] for n in reversed(w2)))
    if best is None:
        return None
    if t1.mobius(best[0]) != t2:
        raise AssertionError("witness verification failed")
    return Witness(best[0], best[1])


@dataclass
class CounterexampleReport:
    theta1: str
    theta2: str
    classical_morita: str
    quantum_morita: bool
    k0_1: str
    k0_2: str
    cf1: ContinuedFraction
    cf2: ContinuedFraction
    conclusion: str

    def to_json(self) -> dict:
        return {
            "theta1": self.theta1,
            "theta2": self.theta2,
            "classical_morita": self.classical_morita,
            "quantum_morita": self.quantum_morita,
            "K0_trace_range_1": self.k0_1,
            "K0_trace_range_2": self.k0_2,
            "cf1": {"preperiod": list(self.cf1.preperiod), "period": list(self.cf1.period)},
            "cf2": {"preperiod": list(self.cf2.preperiod), "period": list(self.cf2.period)},
            "conclusion": self.conclusion,
        }


def counterexample_report(t1: QuadraticIrrational, t2: QuadraticIrrational) -> CounterexampleReport:
    if gl2z_equivalent(t1, t2):
        raise NotACounterexample(f"{t1} and {t2} are GL(2,Z)-equivalent; their rotation algebras are Morita equivalent")
    return CounterexampleReport(
        theta1=str(t1),
        theta2=str(t2),
        classical_morita="Morita equivalent (cited: symplectic 2-tori, not computed)",
        quantum_morita=False,
        k0_1=f"Z + Z*{t1}",
        k0_2=f"Z + Z*{t2}",
        cf1=continued_fraction(t1),
        cf2=continued_fraction(t2),
        conclusion="quantization does not preserve Morita equivalence on the whole Poisson category",
    )
