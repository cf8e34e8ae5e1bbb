"""Seeded random groupoids, functors and principal bibundles.

Groupoids are disjoint unions of blocks ``Pair(n) x K`` with ``K`` a small
group; every finite groupoid is equivalent to such a union, so this family
covers the isomorphism classes that matter at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .groupoid import (
    Bibundle,
    FiniteGroupoid,
    cyclic_table,
    disjoint_union,
    group_groupoid,
    is_biprincipal,
    is_principal,
    klein_table,
    pair_groupoid,
    product_groupoid,
    reverse_bibundle,
    symmetric3_table,
)

GROUPS: dict[str, tuple[tuple[int, ...], ...]] = {
    "Z1": tuple(map(tuple, cyclic_table(1))),
    "Z2": tuple(map(tuple, cyclic_table(2))),
    "Z3": tuple(map(tuple, cyclic_table(3))),
    "V4": tuple(map(tuple, klein_table())),
    "S3": tuple(map(tuple, symmetric3_table())),
}


def _identity(table) -> int:
    return next(e for e in range(len(table)) if all(table[e][g] == g for g in range(len(table))))


def _inverse(table, g: int) -> int:
    e = _identity(table)
    return next(h for h in range(len(table)) if table[g][h] == e)


@lru_cache(maxsize=None)
def _generators(name: str) -> tuple[int, ...]:
    table = GROUPS[name]
    e = _identity(table)
    gens: list[int] = []
    span = {e}
    for g in range(len(table)):
        if g in span:
            continue
        gens.append(g)
        frontier = list(span)
        span = set(span)
        while frontier:
            x = frontier.pop()
            for s in gens:
                y = table[x][s]
                if y not in span:
                    span.add(y)
                    frontier.append(y)
    return tuple(gens)


@lru_cache(maxsize=None)
def homomorphisms(src: str, dst: str) -> tuple[tuple[int, ...], ...]:
    """All group homomorphisms ``src -> dst`` as image tuples."""
    A, B = GROUPS[src], GROUPS[dst]
    gens = _generators(src)
    ea, eb = _identity(A), _identity(B)
    out = []
    for imgs in product(range(len(B)), repeat=len(gens)):
        phi = {ea: eb}
        frontier = [ea]
        ok = True
        while frontier and ok:
            x = frontier.pop()
            for s, t in zip(gens, imgs):
                y, v = A[x][s], B[phi[x]][t]
                if y in phi:
                    if phi[y] != v:
                        ok = False
                        break
                else:
                    phi[y] = v
                    frontier.append(y)
        if ok and all(phi[A[x][y]] == B[phi[x]][phi[y]] for x in range(len(A)) for y in range(len(A))):
            out.append(tuple(phi[x] for x in range(len(A))))
    return tuple(sorted(set(out)))


@dataclass(frozen=True)
class BlockSpec:
    """Shape of ``Pair(n_1) x K_1 + Pair(n_2) x K_2 + ...``."""

    blocks: tuple[tuple[int, str], ...]

    def build(self) -> FiniteGroupoid:
        G = None
        for n, k in self.blocks:
            B = product_groupoid(pair_groupoid(n), group_groupoid(GROUPS[k], name=k))
            G = B if G is None else disjoint_union(G, B)
        assert G is not None
        return G

    def offsets(self) -> list[tuple[int, int]]:
        """(first object, first arrow) of each block."""
        out, o, a = [], 0, 0
        for n, k in self.blocks:
            out.append((o, a))
            o += n
            a += n * n * len(GROUPS[k])
        return out

    def arrow(self, block: int, a: int, b: int, k: int) -> int:
        n, name = self.blocks[block]
        return self.offsets()[block][1] + (a * n + b) * len(GROUPS[name]) + k

    def obj(self, block: int, a: int) -> int:
        return self.offsets()[block][0] + a

    def decode_arrow(self, g: int) -> tuple[int, int, int, int]:
        for i, ((n, name), (_, off)) in enumerate(zip(self.blocks, self.offsets())):
            size = n * n * len(GROUPS[name])
            if g < off + size:
                ab, k = divmod(g - off, len(GROUPS[name]))
                a, b = divmod(ab, n)
                return i, a, b, k
        raise IndexError(g)


@dataclass(frozen=True)
class Functor:
    dom: BlockSpec
    cod: BlockSpec
    obj_map: tuple[int, ...]
    arr_map: tuple[int, ...]


def random_spec(rng: np.random.Generator, max_arrows: int = 18) -> BlockSpec:
    while True:
        nblocks = int(rng.integers(1, 3))
        blocks = []
        for _ in range(nblocks):
            n = int(rng.integers(1, 4))
            choices = ["Z1", "Z2", "Z3"] + (["V4", "S3"] if n == 1 else [])
            blocks.append((n, choices[int(rng.integers(len(choices)))]))
        spec = BlockSpec(tuple(blocks))
        if sum(n * n * len(GROUPS[k]) for n, k in blocks) <= max_arrows:
            return spec


def random_functor(rng: np.random.Generator, dom: BlockSpec, cod: BlockSpec) -> Functor:
    """``((a,b),k) -> ((f a, f b), c(a) phi(k) c(b)^-1)`` blockwise."""
    obj_map: dict[int, int] = {}
    arr_map: dict[int, int] = {}
    for i, (n, kname) in enumerate(dom.blocks):
        j = int(rng.integers(len(cod.blocks)))
        n2, k2 = cod.blocks[j]
        T = GROUPS[k2]
        homs = homomorphisms(kname, k2)
        phi = homs[int(rng.integers(len(homs)))]
        f = [int(rng.integers(n2)) for _ in range(n)]
        c = [int(rng.integers(len(T))) for _ in range(n)]
        for a in range(n):
            obj_map[dom.obj(i, a)] = cod.obj(j, f[a])
        for a, b, k in product(range(n), range(n), range(len(GROUPS[kname]))):
            kk = T[T[c[a]][phi[k]]][_inverse(T, c[b])]
            arr_map[dom.arrow(i, a, b, k)] = cod.arrow(j, f[a], f[b], kk)
    nobj = len(obj_map)
    return Functor(dom, cod, tuple(obj_map[x] for x in range(nobj)), tuple(arr_map[g] for g in range(len(arr_map))))


def functor_bibundle(F: Functor, G: FiniteGroupoid | None = None, H: FiniteGroupoid | None = None) -> Bibundle:
    """``M_F = {(x, h) : tgt(h) = F(x)}``, ``g.(x,h) = (tgt g, F(g) h)``, ``(x,h).h' = (x, h h')``."""
    G = G or F.dom.build()
    H = H or F.cod.build()
    points = [(x, h) for x in range(G.n_obj) for h in range(H.n_arr) if H.tgt[h] == F.obj_map[x]]
    index = {p: i for i, p in enumerate(points)}
    return Bibundle.from_maps(
        G, H, len(points),
        [x for x, _ in points],
        [H.src[h] for _, h in points],
        lambda g, i: index[(G.tgt[g], H.comp[F.arr_map[g]][points[i][1]])],
        lambda i, k: index[(points[i][0], H.comp[points[i][1]][k])],
    )


def equivalence_functor(rng: np.random.Generator, spec: BlockSpec) -> Functor:
    """A random equivalence onto or out of ``spec`` (block inflation or collapse)."""
    i = int(rng.integers(len(spec.blocks)))
    n, k = spec.blocks[i]
    bigger = BlockSpec(spec.blocks[:i] + ((n + 1, k),) + spec.blocks[i + 1:])
    # collapse ``bigger`` onto ``spec`` by sending the extra point to 0 with a twist
    T = GROUPS[k]
    f_obj: dict[int, int] = {}
    f_arr: dict[int, int] = {}
    c = {blk: [0] * m for blk, (m, _) in enumerate(bigger.blocks)}
    c[i] = [0] * (n + 1)
    c[i][n] = int(rng.integers(len(T)))
    for blk, (m, kn) in enumerate(bigger.blocks):
        TT = GROUPS[kn]
        squash = (lambda a: a) if blk != i else (lambda a: a if a < n else 0)
        cc = c[blk]
        for a in range(m):
            f_obj[bigger.obj(blk, a)] = spec.obj(blk, squash(a))
        for a, b, g in product(range(m), range(m), range(len(TT))):
            kk = TT[TT[cc[a]][g]][_inverse(TT, cc[b])]
            f_arr[bigger.arrow(blk, a, b, g)] = spec.arrow(blk, squash(a), squash(b), kk)
    return Functor(bigger, spec, tuple(f_obj[x] for x in range(len(f_obj))), tuple(f_arr[g] for g in range(len(f_arr))))


def random_principal(rng: np.random.Generator, dom: BlockSpec, cod: BlockSpec) -> Bibundle:
    return functor_bibundle(random_functor(rng, dom, cod))


def composable_pairs(seed: int, count: int = 20, max_carrier: int = 40, max_product: int = 400) -> list[tuple[Bibundle, Bibundle]]:
    """Composable principal pairs ``G -M-> H -N-> K`` drawn from functors and reversed equivalences."""
    rng = np.random.default_rng(seed)
    out: list[tuple[Bibundle, Bibundle]] = []
    while len(out) < count:
        kind = len(out) % 4
        if kind == 3:
            # reversed equivalence followed by a functor
            H = random_spec(rng, 12)
            E = equivalence_functor(rng, H)
            M = reverse_bibundle(functor_bibundle(E))
            K = random_spec(rng, 12)
            N = random_principal(rng, E.dom, K)
        elif kind == 2:
            G = random_spec(rng, 12)
            E = equivalence_functor(rng, G)
            M = functor_bibundle(E)
            N = reverse_bibundle(M)
        else:
            G, H, K = (random_spec(rng, 12) for _ in range(3))
            M = random_principal(rng, G, H)
            N = random_principal(rng, H, K)
        if M.size > max_carrier or N.size > max_carrier or M.size * N.size > max_product:
            continue
        assert is_principal(M) and is_principal(N)
        out.append((M, N))
    return out


def biprincipal_bibundles(seed: int, count: int = 10, max_carrier: int = 40) -> list[Bibundle]:
    rng = np.random.default_rng(seed)
    out: list[Bibundle] = []
    while len(out) < count:
        spec = random_spec(rng, 14)
        E = functor_bibundle(equivalence_functor(rng, spec))
        B = reverse_bibundle(E) if rng.integers(2) else E
        if B.size <= max_carrier:
            assert is_biprincipal(B)
            out.append(B)
    return out
