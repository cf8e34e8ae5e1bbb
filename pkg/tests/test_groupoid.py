from __future__ import annotations

from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import point_equivalence
from qfunctor.corpus import composable_pairs
from qfunctor.groupoid import (
    UNDEF,
    Bibundle,
    FiniteGroupoid,
    GroupoidMismatchError,
    StructureError,
    action_groupoid,
    bibundle_isomorphic,
    compose_bibundles,
    cyclic_table,
    group_groupoid,
    identity_bibundle,
    is_biprincipal,
    is_principal,
    klein_table,
    pair_groupoid,
    relabel_bibundle,
    relabel_groupoid,
    reverse_bibundle,
    symmetric3_table,
    validate,
)


def brute_axioms_ok(G: FiniteGroupoid) -> bool:
    """Independent restatement of the groupoid axioms."""
    A = range(G.n_arr)
    for g, h in product(A, A):
        c = G.comp[g][h]
        if (G.src[g] == G.tgt[h]) != (c != UNDEF):
            return False
        if c != UNDEF and (G.src[c], G.tgt[c]) != (G.src[h], G.tgt[g]):
            return False
    for x in range(G.n_obj):
        u = G.unit[x]
        if (G.src[u], G.tgt[u]) != (x, x):
            return False
    for g in A:
        if G.comp[G.unit[G.tgt[g]]][g] != g or G.comp[g][G.unit[G.src[g]]] != g:
            return False
        i = G.inv[g]
        if G.comp[g][i] != G.unit[G.tgt[g]] or G.comp[i][g] != G.unit[G.src[g]]:
            return False
    for f, g, h in product(A, A, A):
        if G.src[f] == G.tgt[g] and G.src[g] == G.tgt[h]:
            if G.comp[G.comp[f][g]][h] != G.comp[f][G.comp[g][h]]:
                return False
    return True


def mutate_comp(G: FiniteGroupoid, g1: int, g2: int, value: int) -> FiniteGroupoid:
    comp = [list(r) for r in G.comp]
    comp[g1][g2] = value
    return FiniteGroupoid.from_tables(G.n_obj, G.src, G.tgt, G.unit, comp, G.inv)


# -- validate -----------------------------------------------------------------

def test_pair2_valid():
    G = pair_groupoid(2)
    assert G.n_arr == 4 and validate(G).ok


def test_broken_associativity_reports_triple():
    G = group_groupoid(cyclic_table(3))
    bad = mutate_comp(G, 1, 1, 0)
    rep = validate(bad)
    assert not rep.ok
    triples = {v.witness for v in rep.violations if v.axiom == "associativity"}
    # (1*1)*2 = 0*2 = 2 but 1*(1*2) = 1*0 = 1
    assert (1, 1, 2) in triples


def test_z2_transformation_groupoid_valid():
    swap = [[0, 1], [1, 0]]
    G = action_groupoid(cyclic_table(2), swap)
    assert G.n_obj == 2 and G.n_arr == 4
    assert validate(G).ok and brute_axioms_ok(G)


def test_malformed_tables_raise_structural_error():
    with pytest.raises(StructureError):
        FiniteGroupoid.from_tables(1, [0, 0], [0], [0], [[0, 1], [1, 0]], [0, 1])
    with pytest.raises(StructureError):
        FiniteGroupoid.from_tables(1, [0], [0], [5], [[0]], [0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.data())
def test_validate_agrees_with_brute_force(n, data):
    G = pair_groupoid(n)
    g1 = data.draw(st.integers(0, G.n_arr - 1))
    g2 = data.draw(st.integers(0, G.n_arr - 1))
    val = data.draw(st.integers(-1, G.n_arr - 1))
    H = mutate_comp(G, g1, g2, val)
    assert validate(H).ok == brute_axioms_ok(H)


# -- constructors ---------------------------------------------------------------

def test_pair_groupoid_shapes():
    assert pair_groupoid(1).n_arr == 1
    G = pair_groupoid(3)
    assert G.n_arr == 9 and G.n_obj == 3 and validate(G).ok and brute_axioms_ok(G)
    # comp((a,b),(b,c)) = (a,c)
    for a, b, c in product(range(3), repeat=3):
        assert G.comp[a * 3 + b][b * 3 + c] == a * 3 + c


@pytest.mark.parametrize("table", [cyclic_table(2), cyclic_table(5), klein_table(), symmetric3_table()])
def test_group_groupoids_valid(table):
    G = group_groupoid(table)
    assert G.n_obj == 1 and G.n_arr == len(table)
    assert validate(G).ok and brute_axioms_ok(G)


def test_non_group_table_rejected():
    with pytest.raises(ValueError):
        group_groupoid([[0, 1], [1, 1]])
    with pytest.raises(ValueError):
        pair_groupoid(0)


# -- principality -------------------------------------------------------------

def test_identity_bibundles_principal():
    for G in (pair_groupoid(1), pair_groupoid(2), group_groupoid(cyclic_table(2))):
        B = identity_bibundle(G)
        assert B.size == G.n_arr and validate(B).ok and is_principal(B)
    assert identity_bibundle(pair_groupoid(1)).size == 1
    assert identity_bibundle(pair_groupoid(2)).size == 4


def test_singleton_fibres_principal(equiv2):
    assert validate(equiv2).ok and is_principal(equiv2) and is_biprincipal(equiv2)


def test_trivial_z2_action_not_principal():
    G, Z2 = pair_groupoid(2), group_groupoid(cyclic_table(2))
    B = Bibundle.from_maps(G, Z2, 2, [0, 1], [0, 0], lambda g, m: G.tgt[g], lambda m, h: m)
    assert validate(B).ok
    assert not is_principal(B)


def test_principal_but_not_biprincipal():
    # Pair(1) -> Z2: the identity bundle of Z2 restricted along the trivial map
    G, Z2 = pair_groupoid(1), group_groupoid(cyclic_table(2))
    B = Bibundle.from_maps(G, Z2, 2, [0, 0], [0, 0], lambda g, m: m, lambda m, h: (m + h) % 2)
    assert validate(B).ok and is_principal(B)
    assert not is_biprincipal(B)


# -- composition --------------------------------------------------------------

def test_unit_laws(equiv2):
    M = equiv2
    assert bibundle_isomorphic(compose_bibundles(M, identity_bibundle(M.right)), M) is not None
    assert bibundle_isomorphic(compose_bibundles(identity_bibundle(M.left), M), M) is not None


def test_equivalence_composed_with_reverse_is_identity(equiv2):
    E = equiv2
    EE = compose_bibundles(E, reverse_bibundle(E))
    # explicit quotient: pairs (m, m') over the single point, H trivial, so 4 classes
    assert EE.size == 4
    assert bibundle_isomorphic(EE, identity_bibundle(E.left)) is not None
    back = compose_bibundles(reverse_bibundle(E), E)
    assert bibundle_isomorphic(back, identity_bibundle(E.right)) is not None


def test_identity_composed_with_identity():
    G = group_groupoid(symmetric3_table())
    C = compose_bibundles(identity_bibundle(G), identity_bibundle(G))
    assert bibundle_isomorphic(C, identity_bibundle(G)) is not None


def test_mismatched_middle_groupoid():
    with pytest.raises(GroupoidMismatchError):
        compose_bibundles(identity_bibundle(pair_groupoid(2)), identity_bibundle(pair_groupoid(3)))


def test_composition_deterministic_representatives(equiv2):
    a = compose_bibundles(equiv2, reverse_bibundle(equiv2))
    b = compose_bibundles(equiv2, reverse_bibundle(equiv2))
    assert a == b


# -- isomorphism ----------------------------------------------------------------

def test_isomorphic_to_itself_is_identity(equiv2):
    assert bibundle_isomorphic(equiv2, equiv2) == (0, 1)


def test_relabelled_identity_found():
    B = identity_bibundle(pair_groupoid(2))
    perm = [2, 0, 3, 1]
    phi = bibundle_isomorphic(B, relabel_bibundle(B, perm))
    assert phi is not None and phi != tuple(range(4))
    assert list(phi) == perm


def test_different_sizes_not_isomorphic():
    assert bibundle_isomorphic(point_equivalence(2), identity_bibundle(pair_groupoid(2))) is None


def test_relabelled_groupoid_still_valid():
    G = pair_groupoid(2)
    H = relabel_groupoid(G, [3, 2, 1, 0], [1, 0])
    assert validate(H).ok and brute_axioms_ok(H)


# -- corpus properties -----------------------------------------------------------

@pytest.fixture(scope="module")
def pairs():
    return composable_pairs(11, count=8)


def test_corpus_composites_valid_and_principal(pairs):
    for M, N in pairs:
        C = compose_bibundles(M, N)
        assert validate(C).ok
        assert is_principal(C)


def test_corpus_unit_laws(pairs):
    for M, _ in pairs:
        assert bibundle_isomorphic(compose_bibundles(M, identity_bibundle(M.right)), M) is not None
        assert bibundle_isomorphic(compose_bibundles(identity_bibundle(M.left), M), M) is not None


def test_corpus_associativity(pairs):
    for M, N in pairs:
        P = identity_bibundle(N.right)
        Q = reverse_bibundle(N) if is_biprincipal(N) else P
        if Q.left != N.right:
            Q = P
        lhs = compose_bibundles(compose_bibundles(M, N), Q)
        rhs = compose_bibundles(M, compose_bibundles(N, Q))
        assert bibundle_isomorphic(lhs, rhs) is not None
