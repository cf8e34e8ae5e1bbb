"""K0 and F = 0 Kasparov classes of finite-dimensional C*-algebras.

A class ``A -> B`` is an integer matrix of shape ``(blocks of B, blocks of A)``
acting on K0 column vectors; the intersection product is matrix
multiplication.  Bimodules realize the nonnegative classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cstar import FinCStar
from .exact import integer_det
from .hilbmod import HilbertBimodule, multiplicity_matrix


class KKShapeError(TypeError):
    pass


@dataclass(frozen=True)
class K0Group:
    """Free abelian group on the Wedderburn blocks; generator ``i`` is the class of a minimal projection in block ``i``."""

    rank: int
    block_sizes: tuple[int, ...]

    def generator(self, i: int) -> np.ndarray:
        e = np.zeros(self.rank, dtype=np.int64)
        e[i] = 1
        return e

    def unit_class(self) -> np.ndarray:
        """``[1_A] = sum_i n_i [p_i]``."""
        return np.array(self.block_sizes, dtype=np.int64)


def k0(A: FinCStar) -> K0Group:
    dims = A.wedderburn().dimension_vector
    return K0Group(len(dims), tuple(dims))


@dataclass(frozen=True)
class KKClass:
    src_blocks: int
    dst_blocks: int
    matrix: tuple[tuple[int, ...], ...]

    @classmethod
    def from_array(cls, m) -> "KKClass":
        a = np.asarray(m, dtype=np.int64)
        if a.ndim != 2:
            raise KKShapeError("a KK class is a 2-d integer matrix")
        return cls(a.shape[1], a.shape[0], tuple(map(tuple, a.tolist())))

    @classmethod
    def zero(cls, src_blocks: int, dst_blocks: int) -> "KKClass":
        return cls.from_array(np.zeros((dst_blocks, src_blocks), dtype=np.int64))

    @classmethod
    def identity(cls, blocks: int) -> "KKClass":
        return cls.from_array(np.eye(blocks, dtype=np.int64))

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64).reshape(self.dst_blocks, self.src_blocks)

    def apply(self, v) -> np.ndarray:
        """Induced map ``K0(A) -> K0(B)``."""
        return self.array() @ np.asarray(v, dtype=np.int64)

    def _same_shape(self, other: "KKClass") -> None:
        if (self.src_blocks, self.dst_blocks) != (other.src_blocks, other.dst_blocks):
            raise KKShapeError("KK classes between different K0 groups")

    def __add__(self, other: "KKClass") -> "KKClass":
        self._same_shape(other)
        return KKClass.from_array(self.array() + other.array())

    def __neg__(self) -> "KKClass":
        return KKClass.from_array(-self.array())

    def __sub__(self, other: "KKClass") -> "KKClass":
        return self + (-other)

    def to_json(self) -> dict:
        return {"src_blocks": self.src_blocks, "dst_blocks": self.dst_blocks, "matrix": [list(r) for r in self.matrix]}


def kk_class(E: HilbertBimodule) -> KKClass:
    """Class of ``(E, F=0)``: block ``i`` of ``A`` goes to ``sum_j m[i][j] [q_j]``."""
    return KKClass.from_array(multiplicity_matrix(E).array().T)


def intersection(x: KKClass, y: KKClass) -> KKClass:
    """``x in KK(A,B)``, ``y in KK(B,C)`` to ``KK(A,C)``."""
    if x.dst_blocks != y.src_blocks:
        raise KKShapeError(f"middle ranks differ: {x.dst_blocks} vs {y.src_blocks}")
    return KKClass.from_array(y.array() @ x.array())


def kk_invertible(x: KKClass) -> bool:
    if x.src_blocks != x.dst_blocks:
        return False
    return abs(integer_det(x.matrix)) == 1


@dataclass
class KIsoReport:
    invertible: bool
    src_rank: int
    dst_rank: int

    @property
    def ok(self) -> bool:
        return (not self.invertible) or self.src_rank == self.dst_rank

    def to_json(self) -> dict:
        return {"invertible": self.invertible, "src_rank": self.src_rank, "dst_rank": self.dst_rank, "ok": self.ok}


def k_iso_check(x: KKClass) -> KIsoReport:
    """An invertible class forces ``K0(A) ~= K0(B)``, hence equal ranks."""
    return KIsoReport(kk_invertible(x), x.src_blocks, x.dst_blocks)
