"""Finite groupoids and principal bibundles.

Composition convention: ``comp[g1][g2]`` is defined iff ``src(g1) == tgt(g2)``
and then ``src(comp) == src(g2)``, ``tgt(comp) == tgt(g1)`` (function order).
Undefined table entries are stored as ``-1``.

Smoothness and submersion conditions degenerate to surjectivity for finite
sets, and s-connectedness conditions are vacuous here.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

UNDEF = -1


class StructureError(ValueError):
    """Raised when tables have the wrong shape or out-of-range entries."""


class GroupoidMismatchError(TypeError):
    """Raised when bibundles are composed over different middle groupoids."""


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple

    def __str__(self) -> str:
        return f"{self.axiom}: {self.witness}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, axiom: str, *witness) -> None:
        self.violations.append(Violation(axiom, tuple(witness)))

    def axioms(self) -> set[str]:
        return {v.axiom for v in self.violations}

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [{"axiom": v.axiom, "witness": list(v.witness)} for v in self.violations]}


def _check_range(name: str, values: Sequence[int], bound: int, allow_undef: bool = False) -> None:
    for i, v in enumerate(values):
        if allow_undef and v == UNDEF:
            continue
        if not isinstance(v, int) or not 0 <= v < bound:
            raise StructureError(f"{name}[{i}] = {v!r} out of range 0..{bound - 1}")


@dataclass(frozen=True)
class FiniteGroupoid:
    n_obj: int
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    unit: tuple[int, ...]
    comp: tuple[tuple[int, ...], ...]
    inv: tuple[int, ...]
    name: str = field(default="", compare=False)

    @classmethod
    def from_tables(cls, n_obj, src, tgt, unit, comp, inv, name: str = "") -> "FiniteGroupoid":
        n_obj = int(n_obj)
        if n_obj < 1:
            raise StructureError("a groupoid needs at least one object")
        src, tgt, unit, inv = (tuple(int(x) for x in t) for t in (src, tgt, unit, inv))
        n = len(src)
        if len(tgt) != n or len(inv) != n:
            raise StructureError(f"src/tgt/inv lengths {len(src)}/{len(tgt)}/{len(inv)} differ")
        if len(unit) != n_obj:
            raise StructureError(f"unit has length {len(unit)}, expected {n_obj}")
        comp = tuple(tuple(UNDEF if x is None else int(x) for x in row) for row in comp)
        if len(comp) != n or any(len(row) != n for row in comp):
            raise StructureError(f"comp must be a {n}x{n} table")
        _check_range("src", src, n_obj)
        _check_range("tgt", tgt, n_obj)
        _check_range("unit", unit, n)
        _check_range("inv", inv, n)
        for i, row in enumerate(comp):
            _check_range(f"comp[{i}]", row, n, allow_undef=True)
        return cls(n_obj, src, tgt, unit, comp, inv, name)

    @property
    def n_arr(self) -> int:
        return len(self.src)

    def composable(self, g1: int, g2: int) -> bool:
        return self.src[g1] == self.tgt[g2]

    def arrows_into(self, x: int) -> list[int]:
        return [g for g in range(self.n_arr) if self.tgt[g] == x]

    def arrows_from(self, x: int) -> list[int]:
        return [g for g in range(self.n_arr) if self.src[g] == x]

    def orbits(self) -> list[list[int]]:
        """Connected components as sorted object lists."""
        seen: dict[int, int] = {}
        comps: list[list[int]] = []
        for x in range(self.n_obj):
            if x in seen:
                continue
            comp = sorted({self.tgt[g] for g in self.arrows_from(x)})
            for y in comp:
                seen[y] = len(comps)
            comps.append(comp)
        return comps

    def isotropy_order(self, x: int) -> int:
        return sum(1 for g in self.arrows_from(x) if self.tgt[g] == x)


def validate_groupoid(G: FiniteGroupoid) -> ValidationReport:
    rep = ValidationReport()
    n = G.n_arr
    for g1, g2 in product(range(n), repeat=2):
        c = G.comp[g1][g2]
        if G.composable(g1, g2):
            if c == UNDEF:
                rep.add("composition defined on composable pair", g1, g2)
            elif G.src[c] != G.src[g2] or G.tgt[c] != G.tgt[g1]:
                rep.add("composition endpoints", g1, g2, c)
        elif c != UNDEF:
            rep.add("composition undefined off composable pairs", g1, g2, c)
    for x in range(G.n_obj):
        u = G.unit[x]
        if G.src[u] != x or G.tgt[u] != x:
            rep.add("unit endpoints", x, u)
            continue
        for g in G.arrows_from(x):
            if G.comp[g][u] != g:
                rep.add("right unit law", g, u)
        for g in G.arrows_into(x):
            if G.comp[u][g] != g:
                rep.add("left unit law", u, g)
    for g1, g2, g3 in product(range(n), repeat=3):
        if not (G.composable(g1, g2) and G.composable(g2, g3)):
            continue
        a = G.comp[g1][g2]
        b = G.comp[g2][g3]
        if UNDEF in (a, b):
            continue
        lhs, rhs = G.comp[a][g3], G.comp[g1][b]
        if lhs != rhs:
            rep.add("associativity", g1, g2, g3)
    for g in range(n):
        h = G.inv[g]
        if G.src[h] != G.tgt[g] or G.tgt[h] != G.src[g]:
            rep.add("inverse endpoints", g, h)
            continue
        if G.comp[h][g] != G.unit[G.src[g]] or G.comp[g][h] != G.unit[G.tgt[g]]:
            rep.add("two-sided inverse", g, h)
    return rep


# -- constructions ----------------------------------------------------------

def pair_groupoid(n: int) -> FiniteGroupoid:
    """Pair groupoid on ``n`` points; arrow ``(a, b)`` has index ``a*n + b``, target ``a``, source ``b``."""
    if n < 1:
        raise ValueError("pair groupoid needs n >= 1")
    idx = lambda a, b: a * n + b  # noqa: E731
    src, tgt, inv = [], [], []
    for a, b in product(range(n), repeat=2):
        tgt.append(a)
        src.append(b)
        inv.append(idx(b, a))
    comp = [[UNDEF] * (n * n) for _ in range(n * n)]
    for a, b, c in product(range(n), repeat=3):
        comp[idx(a, b)][idx(b, c)] = idx(a, c)
    unit = [idx(x, x) for x in range(n)]
    return FiniteGroupoid.from_tables(n, src, tgt, unit, comp, inv, name=f"Pair({n})")


def _check_group(table: Sequence[Sequence[int]]) -> tuple[int, list[int]]:
    n = len(table)
    if n == 0 or any(len(r) != n for r in table):
        raise ValueError("Cayley table must be a nonempty square table")
    for r in table:
        for x in r:
            if not isinstance(x, int) or not 0 <= x < n:
                raise ValueError(f"Cayley table entry {x!r} out of range")
    es = [e for e in range(n) if all(table[e][g] == g and table[g][e] == g for g in range(n))]
    if not es:
        raise ValueError("Cayley table has no identity element")
    e = es[0]
    for a, b, c in product(range(n), repeat=3):
        if table[table[a][b]][c] != table[a][table[b][c]]:
            raise ValueError(f"Cayley table is not associative at {(a, b, c)}")
    inv = []
    for g in range(n):
        cands = [h for h in range(n) if table[g][h] == e and table[h][g] == e]
        if not cands:
            raise ValueError(f"element {g} has no inverse")
        inv.append(cands[0])
    return e, inv


def group_groupoid(cayley_table: Sequence[Sequence[int]], name: str = "") -> FiniteGroupoid:
    """One-object groupoid of a group given by its Cayley table ``table[g][h] = g*h``."""
    table = [[int(x) for x in r] for r in cayley_table]
    e, inv = _check_group(table)
    n = len(table)
    return FiniteGroupoid.from_tables(1, [0] * n, [0] * n, [e], table, inv, name=name or f"Group({n})")


def cyclic_table(m: int) -> list[list[int]]:
    return [[(a + b) % m for b in range(m)] for a in range(m)]


def symmetric3_table() -> list[list[int]]:
    from itertools import permutations

    perms = list(permutations(range(3)))
    pos = {p: i for i, p in enumerate(perms)}
    return [[pos[tuple(p[q[k]] for k in range(3))] for q in perms] for p in perms]


def klein_table() -> list[list[int]]:
    return [[a ^ b for b in range(4)] for a in range(4)]


def action_groupoid(cayley_table: Sequence[Sequence[int]], action: Sequence[Sequence[int]]) -> FiniteGroupoid:
    """Transformation groupoid of a left group action ``action[g][x] = g.x``.

    Arrow ``(g, x)`` (index ``g*n_points + x``) goes from ``x`` to ``g.x``.
    """
    table = [[int(v) for v in r] for r in cayley_table]
    e, ginv = _check_group(table)
    ng, npts = len(table), len(action[0])
    for g in range(ng):
        for x in range(npts):
            if action[e][x] != x or action[table[g][ginv[g]]][x] != x:
                raise ValueError("not a group action")
            for h in range(ng):
                if action[g][action[h][x]] != action[table[g][h]][x]:
                    raise ValueError("not a group action")
    idx = lambda g, x: g * npts + x  # noqa: E731
    src, tgt, inv = [], [], []
    for g, x in product(range(ng), range(npts)):
        src.append(x)
        tgt.append(action[g][x])
        inv.append(idx(ginv[g], action[g][x]))
    n = ng * npts
    comp = [[UNDEF] * n for _ in range(n)]
    for g, x in product(range(ng), range(npts)):
        for h, y in product(range(ng), range(npts)):
            # (g, x) o (h, y) needs x == h.y
            if x == action[h][y]:
                comp[idx(g, x)][idx(h, y)] = idx(table[g][h], y)
    unit = [idx(e, x) for x in range(npts)]
    return FiniteGroupoid.from_tables(npts, src, tgt, unit, comp, inv, name=f"Action({ng},{npts})")


def product_groupoid(G: FiniteGroupoid, H: FiniteGroupoid) -> FiniteGroupoid:
    """Cartesian product; arrow ``(g, h)`` has index ``g*H.n_arr + h``."""
    nh, oh = H.n_arr, H.n_obj
    idx = lambda g, h: g * nh + h  # noqa: E731
    src, tgt, inv = [], [], []
    for g, h in product(range(G.n_arr), range(nh)):
        src.append(G.src[g] * oh + H.src[h])
        tgt.append(G.tgt[g] * oh + H.tgt[h])
        inv.append(idx(G.inv[g], H.inv[h]))
    n = G.n_arr * nh
    comp = [[UNDEF] * n for _ in range(n)]
    for g1, h1, g2, h2 in product(range(G.n_arr), range(nh), range(G.n_arr), range(nh)):
        c1, c2 = G.comp[g1][g2], H.comp[h1][h2]
        if c1 != UNDEF and c2 != UNDEF:
            comp[idx(g1, h1)][idx(g2, h2)] = idx(c1, c2)
    unit = [idx(G.unit[x], H.unit[y]) for x, y in product(range(G.n_obj), range(oh))]
    return FiniteGroupoid.from_tables(G.n_obj * oh, src, tgt, unit, comp, inv, name=f"{G.name}x{H.name}")


def disjoint_union(G: FiniteGroupoid, H: FiniteGroupoid) -> FiniteGroupoid:
    """``G`` followed by ``H``; arrows and objects of ``H`` are shifted."""
    na, oa = G.n_arr, G.n_obj
    n = na + H.n_arr
    comp = [[UNDEF] * n for _ in range(n)]
    for g1, g2 in product(range(na), repeat=2):
        comp[g1][g2] = G.comp[g1][g2]
    for h1, h2 in product(range(H.n_arr), repeat=2):
        c = H.comp[h1][h2]
        comp[na + h1][na + h2] = UNDEF if c == UNDEF else na + c
    return FiniteGroupoid.from_tables(
        oa + H.n_obj,
        list(G.src) + [oa + s for s in H.src],
        list(G.tgt) + [oa + t for t in H.tgt],
        list(G.unit) + [na + u for u in H.unit],
        comp,
        list(G.inv) + [na + i for i in H.inv],
        name=f"{G.name}+{H.name}",
    )


def relabel_groupoid(G: FiniteGroupoid, arrow_perm: Sequence[int], obj_perm: Sequence[int]) -> FiniteGroupoid:
    """Isomorphic copy: old arrow ``g`` becomes ``arrow_perm[g]``, old object ``x`` becomes ``obj_perm[x]``."""
    n = G.n_arr
    pa, po = list(arrow_perm), list(obj_perm)
    src, tgt, inv = [0] * n, [0] * n, [0] * n
    comp = [[UNDEF] * n for _ in range(n)]
    for g in range(n):
        src[pa[g]] = po[G.src[g]]
        tgt[pa[g]] = po[G.tgt[g]]
        inv[pa[g]] = pa[G.inv[g]]
        for h in range(n):
            c = G.comp[g][h]
            if c != UNDEF:
                comp[pa[g]][pa[h]] = pa[c]
    unit = [0] * G.n_obj
    for x in range(G.n_obj):
        unit[po[x]] = pa[G.unit[x]]
    return FiniteGroupoid.from_tables(G.n_obj, src, tgt, unit, comp, inv, name=G.name + "'")


# -- bibundles --------------------------------------------------------------

@dataclass(frozen=True)
class Bibundle:
    """A ``G``-``H`` bibundle on the carrier ``{0, ..., size-1}``.

    ``lact[g][m]`` is ``g.m`` (defined iff ``src(g) == lanchor[m]``) and
    ``ract[m][h]`` is ``m.h`` (defined iff ``ranchor[m] == tgt(h)``).
    """

    left: FiniteGroupoid
    right: FiniteGroupoid
    size: int
    lanchor: tuple[int, ...]
    ranchor: tuple[int, ...]
    lact: tuple[tuple[int, ...], ...]
    ract: tuple[tuple[int, ...], ...]

    @classmethod
    def from_tables(cls, left, right, size, lanchor, ranchor, lact, ract) -> "Bibundle":
        size = int(size)
        lanchor, ranchor = tuple(int(x) for x in lanchor), tuple(int(x) for x in ranchor)
        if len(lanchor) != size or len(ranchor) != size:
            raise StructureError("anchor lengths must equal the carrier size")
        _check_range("lanchor", lanchor, left.n_obj)
        _check_range("ranchor", ranchor, right.n_obj)
        lact = tuple(tuple(UNDEF if x is None else int(x) for x in row) for row in lact)
        ract = tuple(tuple(UNDEF if x is None else int(x) for x in row) for row in ract)
        if len(lact) != left.n_arr or any(len(r) != size for r in lact):
            raise StructureError(f"lact must be a {left.n_arr}x{size} table")
        if len(ract) != size or any(len(r) != right.n_arr for r in ract):
            raise StructureError(f"ract must be a {size}x{right.n_arr} table")
        for i, r in enumerate(lact):
            _check_range(f"lact[{i}]", r, size, allow_undef=True)
        for i, r in enumerate(ract):
            _check_range(f"ract[{i}]", r, size, allow_undef=True)
        return cls(left, right, size, lanchor, ranchor, lact, ract)

    @classmethod
    def from_maps(cls, left, right, size, lanchor, ranchor, lmap, rmap) -> "Bibundle":
        """Build from callables ``lmap(g, m)`` and ``rmap(m, h)`` evaluated where defined."""
        lact = [
            [lmap(g, m) if left.src[g] == lanchor[m] else UNDEF for m in range(size)] for g in range(left.n_arr)
        ]
        ract = [
            [rmap(m, h) if ranchor[m] == right.tgt[h] else UNDEF for h in range(right.n_arr)] for m in range(size)
        ]
        return cls.from_tables(left, right, size, lanchor, ranchor, lact, ract)

    def fiber(self, x: int) -> list[int]:
        return [m for m in range(self.size) if self.lanchor[m] == x]


def validate_bibundle(B: Bibundle) -> ValidationReport:
    rep = ValidationReport()
    G, H = B.left, B.right
    for sub, label in ((validate_groupoid(G), "left groupoid"), (validate_groupoid(H), "right groupoid")):
        for v in sub.violations:
            rep.add(f"{label}: {v.axiom}", *v.witness)
    if not rep.ok:
        return rep
    for g, m in product(range(G.n_arr), range(B.size)):
        r = B.lact[g][m]
        if G.src[g] == B.lanchor[m]:
            if r == UNDEF:
                rep.add("left action defined when src(g) = pi(m)", g, m)
            elif B.lanchor[r] != G.tgt[g]:
                rep.add("pi(g.m) = tgt(g)", g, m)
            elif B.ranchor[r] != B.ranchor[m]:
                rep.add("rho(g.m) = rho(m)", g, m)
        elif r != UNDEF:
            rep.add("left action undefined off the anchor", g, m)
    for m, h in product(range(B.size), range(H.n_arr)):
        r = B.ract[m][h]
        if B.ranchor[m] == H.tgt[h]:
            if r == UNDEF:
                rep.add("right action defined when rho(m) = tgt(h)", m, h)
            elif B.ranchor[r] != H.src[h]:
                rep.add("rho(m.h) = src(h)", m, h)
            elif B.lanchor[r] != B.lanchor[m]:
                rep.add("pi(m.h) = pi(m)", m, h)
        elif r != UNDEF:
            rep.add("right action undefined off the anchor", m, h)
    if not rep.ok:
        return rep
    for m in range(B.size):
        if B.lact[G.unit[B.lanchor[m]]][m] != m:
            rep.add("left unit acts trivially", m)
        if B.ract[m][H.unit[B.ranchor[m]]] != m:
            rep.add("right unit acts trivially", m)
    for g1, g2 in product(range(G.n_arr), repeat=2):
        if not G.composable(g1, g2):
            continue
        g12 = G.comp[g1][g2]
        for m in range(B.size):
            if G.src[g2] != B.lanchor[m]:
                continue
            if B.lact[g1][B.lact[g2][m]] != B.lact[g12][m]:
                rep.add("left action associativity", g1, g2, m)
    for h1, h2 in product(range(H.n_arr), repeat=2):
        if not H.composable(h1, h2):
            continue
        h12 = H.comp[h1][h2]
        for m in range(B.size):
            if B.ranchor[m] != H.tgt[h1]:
                continue
            if B.ract[B.ract[m][h1]][h2] != B.ract[m][h12]:
                rep.add("right action associativity", m, h1, h2)
    for g, m, h in product(range(G.n_arr), range(B.size), range(H.n_arr)):
        if G.src[g] != B.lanchor[m] or B.ranchor[m] != H.tgt[h]:
            continue
        if B.ract[B.lact[g][m]][h] != B.lact[g][B.ract[m][h]]:
            rep.add("actions commute", g, m, h)
    return rep


def validate(obj: FiniteGroupoid | Bibundle) -> ValidationReport:
    if isinstance(obj, FiniteGroupoid):
        return validate_groupoid(obj)
    if isinstance(obj, Bibundle):
        return validate_bibundle(obj)
    raise TypeError(f"cannot validate {type(obj).__name__}")


def is_principal(B: Bibundle) -> bool:
    """Left anchor onto, and the right groupoid free and transitive on its fibers."""
    if set(B.lanchor) != set(range(B.left.n_obj)):
        return False
    for m in range(B.size):
        hits: dict[int, int] = {}
        for h in range(B.right.n_arr):
            r = B.ract[m][h]
            if r != UNDEF:
                hits[r] = hits.get(r, 0) + 1
        for m2 in B.fiber(B.lanchor[m]):
            if hits.get(m2, 0) != 1:
                return False
    return True


def reverse_bibundle(B: Bibundle) -> Bibundle:
    """The ``H``-``G`` bibundle ``h.m = m.h^-1``, ``m.g = g^-1.m``."""
    G, H = B.left, B.right
    return Bibundle.from_maps(
        H, G, B.size, B.ranchor, B.lanchor,
        lambda h, m: B.ract[m][H.inv[h]],
        lambda m, g: B.lact[G.inv[g]][m],
    )


def is_biprincipal(B: Bibundle) -> bool:
    """Principal on both sides, i.e. a Morita equivalence of groupoids."""
    return is_principal(B) and is_principal(reverse_bibundle(B))


def identity_bibundle(G: FiniteGroupoid) -> Bibundle:
    return Bibundle.from_tables(
        G, G, G.n_arr, G.tgt, G.src,
        [list(G.comp[g]) for g in range(G.n_arr)],
        [list(G.comp[k]) for k in range(G.n_arr)],
    )


def compose_bibundles(M: Bibundle, N: Bibundle) -> Bibundle:
    """``(M x_H N) / H`` with ``(m, n).h = (m.h, h^-1.n)``.

    Each orbit is represented by its lexicographically least pair; carrier
    points are numbered in increasing order of representatives.
    """
    if M.right != N.left:
        raise GroupoidMismatchError("right groupoid of M differs from left groupoid of N")
    H = M.right
    pairs = [(m, n) for m in range(M.size) for n in range(N.size) if M.ranchor[m] == N.lanchor[n]]
    rep_of: dict[tuple[int, int], tuple[int, int]] = {}
    for m, n in pairs:
        if (m, n) in rep_of:
            continue
        orbit = []
        for h in range(H.n_arr):
            mh = M.ract[m][h]
            if mh == UNDEF:
                continue
            orbit.append((mh, N.lact[H.inv[h]][n]))
        r = min(orbit)
        for p in orbit:
            rep_of[p] = r
    reps = sorted(set(rep_of.values()))
    index = {r: i for i, r in enumerate(reps)}
    lanchor = [M.lanchor[m] for m, _ in reps]
    ranchor = [N.ranchor[n] for _, n in reps]
    return Bibundle.from_maps(
        M.left, N.right, len(reps), lanchor, ranchor,
        lambda g, i: index[rep_of[(M.lact[g][reps[i][0]], reps[i][1])]],
        lambda i, k: index[rep_of[(reps[i][0], N.ract[reps[i][1]][k])]],
    )


def disjoint_union_bibundle(M: Bibundle, N: Bibundle) -> Bibundle:
    """``M + N`` as a ``(G1+G2)``-``(H1+H2)`` bibundle."""
    G = disjoint_union(M.left, N.left)
    H = disjoint_union(M.right, N.right)
    ga, ha, ma = M.left.n_arr, M.right.n_arr, M.size
    go, ho = M.left.n_obj, M.right.n_obj
    lanchor = list(M.lanchor) + [go + x for x in N.lanchor]
    ranchor = list(M.ranchor) + [ho + y for y in N.ranchor]

    def lmap(g, m):
        return M.lact[g][m] if g < ga else ma + N.lact[g - ga][m - ma]

    def rmap(m, h):
        return M.ract[m][h] if h < ha else ma + N.ract[m - ma][h - ha]

    return Bibundle.from_maps(G, H, ma + N.size, lanchor, ranchor, lmap, rmap)


def relabel_bibundle(B: Bibundle, perm: Sequence[int]) -> Bibundle:
    """Copy of ``B`` with carrier point ``m`` renamed ``perm[m]``."""
    p = list(perm)
    q = [0] * B.size
    for m, pm in enumerate(p):
        q[pm] = m
    return Bibundle.from_maps(
        B.left, B.right, B.size,
        [B.lanchor[q[i]] for i in range(B.size)],
        [B.ranchor[q[i]] for i in range(B.size)],
        lambda g, i: p[B.lact[g][q[i]]],
        lambda i, h: p[B.ract[q[i]][h]],
    )


def _orbits(B: Bibundle) -> list[list[int]]:
    seen = [False] * B.size
    out = []
    for m0 in range(B.size):
        if seen[m0]:
            continue
        seen[m0] = True
        orb, queue = [m0], deque([m0])
        while queue:
            m = queue.popleft()
            nbrs = [B.lact[g][m] for g in range(B.left.n_arr)] + [B.ract[m][h] for h in range(B.right.n_arr)]
            for r in nbrs:
                if r != UNDEF and not seen[r]:
                    seen[r] = True
                    orb.append(r)
                    queue.append(r)
        out.append(orb)
    return out


def _propagate(M: Bibundle, N: Bibundle, phi: dict[int, int], used: set[int], m0: int, n0: int) -> list[int] | None:
    """Extend ``phi`` along the orbit of ``m0 -> n0``; returns the new keys or ``None`` on conflict."""
    added: list[int] = []

    def assign(m, n) -> bool:
        if m in phi:
            return phi[m] == n
        if n in used or M.lanchor[m] != N.lanchor[n] or M.ranchor[m] != N.ranchor[n]:
            return False
        phi[m] = n
        used.add(n)
        added.append(m)
        return True

    if not assign(m0, n0):
        return None
    queue = deque([m0])
    while queue:
        m = queue.popleft()
        n = phi[m]
        steps = [(M.lact[g][m], N.lact[g][n]) for g in range(M.left.n_arr)]
        steps += [(M.ract[m][h], N.ract[n][h]) for h in range(M.right.n_arr)]
        for a, b in steps:
            if (a == UNDEF) != (b == UNDEF):
                break
            if a == UNDEF:
                continue
            fresh = a not in phi
            if not assign(a, b):
                break
            if fresh:
                queue.append(a)
        else:
            continue
        for k in added:
            used.discard(phi.pop(k))
        return None
    return added


def bibundle_isomorphic(M: Bibundle, N: Bibundle) -> tuple[int, ...] | None:
    """An equivariant, anchor-preserving bijection ``M -> N`` or ``None``.

    Backtracks over images of one point per orbit; the rest of each orbit is
    forced by equivariance.
    """
    if M.left != N.left or M.right != N.right or M.size != N.size:
        return None
    orbits = _orbits(M)
    phi: dict[int, int] = {}
    used: set[int] = set()

    def search(k: int) -> bool:
        if k == len(orbits):
            return True
        m0 = orbits[k][0]
        for n0 in range(N.size):
            if n0 in used:
                continue
            added = _propagate(M, N, phi, used, m0, n0)
            if added is None:
                continue
            if len(added) == len(orbits[k]) and search(k + 1):
                return True
            for a in added:
                used.discard(phi.pop(a))
        return False

    if not search(0):
        return None
    return tuple(phi[m] for m in range(M.size))

