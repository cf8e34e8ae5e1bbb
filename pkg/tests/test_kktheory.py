from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfunctor.corpus import composable_pairs
from qfunctor.cstar import canonical_bimodule, convolution_algebra, matrix_algebra, scalars
from qfunctor.groupoid import cyclic_table, group_groupoid, symmetric3_table
from qfunctor.hilbmod import column_bimodule, direct_sum, interior_tensor, row_bimodule, transport
from qfunctor.kktheory import KKClass, KKShapeError, intersection, k0, k_iso_check, kk_class, kk_invertible
from qfunctor.quantfunctor import quantize_arrow


def test_k0_ranks():
    assert k0(scalars()).rank == 1
    assert k0(matrix_algebra(3)).rank == 1
    assert k0(convolution_algebra(group_groupoid(cyclic_table(2)))).rank == 2
    K = k0(convolution_algebra(group_groupoid(symmetric3_table())))
    assert K.rank == 3 and sorted(K.unit_class().tolist()) == [1, 1, 2]


def test_kk_class_examples():
    Z3 = convolution_algebra(group_groupoid(cyclic_table(3)))
    assert kk_class(canonical_bimodule(Z3)) == KKClass.identity(3)
    assert kk_class(column_bimodule(2)).array().tolist() == [[1]]
    E, F = column_bimodule(2), transport(column_bimodule(2), [[1, 1], [0, 1]])
    assert kk_class(direct_sum(E, F)) == kk_class(E) + kk_class(F)


def test_orientation_is_dst_by_src():
    # Q of Pair(1) -> Z2 identity-like bibundle: C -> C*(Z2) with matrix 2x1
    from qfunctor.groupoid import Bibundle, pair_groupoid

    P1, Z2 = pair_groupoid(1), group_groupoid(cyclic_table(2))
    B = Bibundle.from_maps(P1, Z2, 2, [0, 0], [0, 0], lambda g, m: m, lambda m, h: (m + h) % 2)
    x = kk_class(quantize_arrow(B))
    assert (x.src_blocks, x.dst_blocks) == (1, 2)
    assert x.array().shape == (2, 1)
    # the unit class of C maps to the class of the regular module: one of each character
    assert x.apply(k0(scalars()).unit_class()).tolist() == [1, 1]


def test_intersection_examples():
    x = kk_class(column_bimodule(2))
    assert intersection(x, KKClass.identity(1)) == x
    assert intersection(KKClass.identity(1), x) == x
    col, row = kk_class(column_bimodule(2)), kk_class(row_bimodule(2))
    assert intersection(col, row) == KKClass.identity(1)
    assert intersection(col, row) == kk_class(interior_tensor(column_bimodule(2), row_bimodule(2)))


def test_shape_mismatch():
    with pytest.raises(KKShapeError):
        intersection(KKClass.identity(2), KKClass.identity(3))
    with pytest.raises(KKShapeError):
        KKClass.identity(2) + KKClass.identity(3)
    assert issubclass(KKShapeError, TypeError)


def test_invertibility():
    assert kk_invertible(KKClass.identity(3))
    assert kk_invertible(KKClass.from_array([[0, 1], [1, 0]]))
    assert kk_invertible(KKClass.from_array([[2, 1], [1, 1]]))
    assert not kk_invertible(KKClass.from_array([[2]]))
    assert not kk_invertible(KKClass.from_array([[1, 1]]))
    assert kk_invertible(kk_class(column_bimodule(3)))


def test_k_iso_report():
    assert k_iso_check(KKClass.identity(2)).ok
    rep = k_iso_check(KKClass.from_array([[1, 0]]))
    assert not rep.invertible and rep.ok


def test_functor_on_corpus():
    for M, N in composable_pairs(13, count=10):
        E, F = quantize_arrow(M), quantize_arrow(N)
        assert kk_class(interior_tensor(E, F)) == intersection(kk_class(E), kk_class(F))


_mat = st.lists(st.lists(st.integers(-5, 5), min_size=2, max_size=2), min_size=2, max_size=2)


@settings(max_examples=50, deadline=None)
@given(_mat, _mat, _mat)
def test_group_laws(a, b, c):
    x, y, z = (KKClass.from_array(m) for m in (a, b, c))
    zero = KKClass.zero(2, 2)
    assert (x + y) + z == x + (y + z)
    assert x + y == y + x
    assert x + zero == x
    assert x + (-x) == zero
    assert x - y == x + (-y)
    # intersection is bilinear and associative
    assert intersection(x, y + z) == intersection(x, y) + intersection(x, z)
    assert intersection(intersection(x, y), z) == intersection(x, intersection(y, z))


@settings(max_examples=50, deadline=None)
@given(_mat)
def test_invertible_iff_unimodular(a):
    x = KKClass.from_array(a)
    det = round(np.linalg.det(np.array(a, dtype=float)))
    assert kk_invertible(x) == (abs(det) == 1)
    if kk_invertible(x):
        inv = np.rint(np.linalg.inv(np.array(a, dtype=float))).astype(int)
        assert intersection(x, KKClass.from_array(inv)) == KKClass.identity(2)
