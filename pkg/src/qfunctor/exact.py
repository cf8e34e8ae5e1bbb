"""Exact Gaussian-rational scalars, sparse vectors and exact linear algebra.

Scalars are elements of sympy's ``QQ_I`` domain.  Sparse vectors are plain
``dict[int, scalar]`` with no stored zeros.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

ZERO = QQ_I.zero
ONE = QQ_I.one
I = QQ_I(0, 1)
Scalar = type(ONE)

SparseVec = dict  # dict[int, Scalar]

_NUM = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def _rational(x) -> object:
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return QQ(x)
    if isinstance(x, Fraction):
        return QQ(x.numerator, x.denominator)
    if isinstance(x, Rational):
        return QQ(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        m = _NUM.match(x)
        if not m:
            raise ValueError(f"not a rational literal: {x!r}")
        return QQ(int(m.group(1)), int(m.group(2) or 1))
    if isinstance(x, float):
        if not x.is_integer():
            raise TypeError(f"inexact float {x!r} cannot be used as an exact scalar")
        return QQ(int(x))
    try:
        return QQ.convert(x)
    except Exception as exc:  # pragma: no cover - defensive
        raise TypeError(f"cannot convert {x!r} to a rational") from exc


def gauss(x, y=0) -> Scalar:
    """Coerce ``x + i*y`` to an exact Gaussian rational.

    Accepts ints, Fractions, ``QQ``/``QQ_I`` elements, integer-valued floats,
    complex numbers with integer parts and ``"p/q"`` strings.
    """
    if isinstance(x, Scalar) and y == 0:
        return x
    if isinstance(x, complex):
        if y != 0:
            raise TypeError("complex real part with separate imaginary part")
        return QQ_I(_rational(x.real), _rational(x.imag))
    return QQ_I(_rational(x), _rational(y))


def conj(z: Scalar) -> Scalar:
    return QQ_I(z.x, -z.y)


def to_complex(z: Scalar) -> complex:
    return complex(float(z.x), float(z.y))


def is_real(z: Scalar) -> bool:
    return not z.y


def frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def encode(z: Scalar) -> list[list[int]]:
    """Serialize as ``[[re_num, re_den], [im_num, im_den]]``."""
    return [[int(z.x.numerator), int(z.x.denominator)], [int(z.y.numerator), int(z.y.denominator)]]


def decode(obj) -> Scalar:
    if isinstance(obj, (list, tuple)) and len(obj) == 2 and isinstance(obj[0], (list, tuple)):
        (rn, rd), (im_n, im_d) = obj
        return QQ_I(QQ(int(rn), int(rd)), QQ(int(im_n), int(im_d)))
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return QQ_I(QQ(int(obj[0]), int(obj[1])), QQ(0))
    return gauss(obj)


# -- sparse vectors ---------------------------------------------------------

def sp_axpy(acc: dict, c: Scalar, v: Mapping[int, Scalar]) -> dict:
    """``acc += c * v`` in place; returns ``acc``."""
    if not c:
        return acc
    for k, x in v.items():
        s = acc.get(k, ZERO) + c * x
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)
    return acc


def sp_add(u: Mapping[int, Scalar], v: Mapping[int, Scalar]) -> dict:
    return sp_axpy(dict(u), ONE, v)


def sp_sub(u: Mapping[int, Scalar], v: Mapping[int, Scalar]) -> dict:
    return sp_axpy(dict(u), -ONE, v)


def sp_scale(c: Scalar, v: Mapping[int, Scalar]) -> dict:
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def sp_conj(v: Mapping[int, Scalar]) -> dict:
    return {k: conj(x) for k, x in v.items()}


def sp_clean(v: Mapping[int, object]) -> dict:
    out = {}
    for k, x in v.items():
        z = gauss(x)
        if z:
            out[int(k)] = z
    return out


def sp_dense(v: Mapping[int, Scalar], n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    for k, x in v.items():
        out[k] = to_complex(x)
    return out


def basis_vec(i: int) -> dict:
    return {i: ONE}


# -- exact linear algebra ---------------------------------------------------

def _dm(rows: Iterable[Mapping[int, Scalar]], ncols: int) -> DomainMatrix:
    rows = list(rows)
    data = {i: dict(r) for i, r in enumerate(rows) if r}
    return DomainMatrix(data, (len(rows), ncols), QQ_I)


def nullspace(rows: Iterable[Mapping[int, Scalar]], ncols: int) -> list[dict]:
    """Basis of ``{x : R x = 0}`` for the sparse row list ``R``."""
    rows = [r for r in rows if r]
    if not rows:
        return [basis_vec(j) for j in range(ncols)]
    ns = _dm(rows, ncols).nullspace().to_sdm()
    return [dict(ns[i]) for i in sorted(ns)] if ns.shape[0] else []


def rank(rows: Iterable[Mapping[int, Scalar]], ncols: int) -> int:
    rows = [r for r in rows if r]
    if not rows:
        return 0
    return len(_dm(rows, ncols).rref()[1])


def pivot_columns(rows: Iterable[Mapping[int, Scalar]], ncols: int) -> tuple[int, ...]:
    rows = [r for r in rows if r]
    if not rows:
        return ()
    return tuple(_dm(rows, ncols).rref()[1])


def solve_square(rows: list[Mapping[int, Scalar]], rhs_cols: list[Mapping[int, Scalar]]) -> list[dict]:
    """Solve ``S X = B`` for invertible square sparse ``S``; ``B`` given by columns."""
    n = len(rows)
    S = _dm(rows, n)
    if not rhs_cols:
        return []
    Bdata: dict[int, dict[int, Scalar]] = {}
    for j, col in enumerate(rhs_cols):
        for i, x in col.items():
            Bdata.setdefault(i, {})[j] = x
    B = DomainMatrix(Bdata, (n, len(rhs_cols)), QQ_I)
    X = S.to_field().inv().matmul(B).to_sdm()
    cols: list[dict] = [{} for _ in rhs_cols]
    for i, row in X.items():
        for j, x in row.items():
            if x:
                cols[j][i] = x
    return cols


def integer_det(matrix: Iterable[Iterable[int]]) -> int:
    """Exact determinant of a square integer matrix."""
    m = [list(map(int, r)) for r in matrix]
    if not m:
        return 1
    from sympy.polys.domains import ZZ

    return int(DomainMatrix([[ZZ(x) for x in r] for r in m], (len(m), len(m)), ZZ).det())
