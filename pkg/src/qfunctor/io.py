"""JSON documents for groupoids, bibundles and dumps of algebras/bimodules.

Groupoid document::

    {"kind": "groupoid", "name": "...", "n_obj": 2,
     "src": [...], "tgt": [...], "unit": [...], "inv": [...],
     "comp": [[g1, g2, g1g2], ...]}          # only defined composites

or one of the shorthands ``{"kind": "groupoid", "pair": n}``,
``{"kind": "groupoid", "group": "Z2" | "Z3" | "V4" | "S3"}`` and
``{"kind": "groupoid", "cayley": [[...], ...]}``.

Bibundle document::

    {"kind": "bibundle", "left": <groupoid>, "right": <groupoid>,
     "size": 2, "lanchor": [...], "ranchor": [...],
     "lact": [[g, m, g.m], ...], "ract": [[m, h, m.h], ...]}

A nested groupoid may also be given as a path string relative to the
document.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .cstar import FinCStar
from .exact import encode
from .groupoid import UNDEF, Bibundle, FiniteGroupoid, StructureError, group_groupoid, pair_groupoid
from .hilbmod import HilbertBimodule


class ParseError(ValueError):
    """Malformed input; ``where`` is ``file:line:col`` or ``file:$.json.path``."""

    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


def _need(doc: Any, key: str, path: str, src: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"{src}:{path}", f"missing field {key!r}")
    return doc[key]


def _int_list(v: Any, path: str, src: str) -> list[int]:
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ParseError(f"{src}:{path}", "expected a list of integers")
    return v


def _triples(v: Any, path: str, src: str) -> list[tuple[int, int, int]]:
    if not isinstance(v, list):
        raise ParseError(f"{src}:{path}", "expected a list of [a, b, c] triples")
    out = []
    for i, t in enumerate(v):
        if not (isinstance(t, list) and len(t) == 3 and all(isinstance(x, int) and not isinstance(x, bool) for x in t)):
            raise ParseError(f"{src}:{path}[{i}]", "expected an integer triple")
        out.append(tuple(t))
    return out


def groupoid_from_doc(doc: Any, src: str = "<doc>", path: str = "$", base: Path | None = None) -> FiniteGroupoid:
    if isinstance(doc, str):
        return load_groupoid((base or Path(".")) / doc)
    kind = doc.get("kind", "groupoid") if isinstance(doc, dict) else None
    if kind != "groupoid":
        raise ParseError(f"{src}:{path}", f"expected a groupoid document, got kind {kind!r}")
    try:
        if "pair" in doc:
            n = doc["pair"]
            if not isinstance(n, int) or n < 1:
                raise ParseError(f"{src}:{path}.pair", "expected a positive integer")
            return pair_groupoid(n)
        if "group" in doc:
            from .corpus import GROUPS

            name = doc["group"]
            if name not in GROUPS:
                raise ParseError(f"{src}:{path}.group", f"unknown group {name!r}; known: {sorted(GROUPS)}")
            return group_groupoid(GROUPS[name], name=name)
        if "cayley" in doc:
            return group_groupoid(doc["cayley"], name=doc.get("name", ""))
        n_obj = _need(doc, "n_obj", path, src)
        fields = {k: _int_list(_need(doc, k, path, src), f"{path}.{k}", src) for k in ("src", "tgt", "unit", "inv")}
        n = len(fields["src"])
        comp = [[UNDEF] * n for _ in range(n)]
        for i, (a, b, c) in enumerate(_triples(_need(doc, "comp", path, src), f"{path}.comp", src)):
            if not (0 <= a < n and 0 <= b < n):
                raise ParseError(f"{src}:{path}.comp[{i}]", f"arrow index out of range 0..{n - 1}")
            comp[a][b] = c
        return FiniteGroupoid.from_tables(n_obj, fields["src"], fields["tgt"], fields["unit"], comp, fields["inv"],
                                          name=doc.get("name", ""))
    except (StructureError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{src}:{path}", str(exc)) from exc


def bibundle_from_doc(doc: Any, src: str = "<doc>", base: Path | None = None) -> Bibundle:
    if not isinstance(doc, dict) or doc.get("kind") != "bibundle":
        raise ParseError(f"{src}:$", "expected a document with kind 'bibundle'")
    G = groupoid_from_doc(_need(doc, "left", "$", src), src, "$.left", base)
    H = groupoid_from_doc(_need(doc, "right", "$", src), src, "$.right", base)
    size = _need(doc, "size", "$", src)
    if not isinstance(size, int) or size < 0:
        raise ParseError(f"{src}:$.size", "expected a nonnegative integer")
    lanchor = _int_list(_need(doc, "lanchor", "$", src), "$.lanchor", src)
    ranchor = _int_list(_need(doc, "ranchor", "$", src), "$.ranchor", src)
    lact = [[UNDEF] * size for _ in range(G.n_arr)]
    ract = [[UNDEF] * H.n_arr for _ in range(size)]
    for i, (g, m, r) in enumerate(_triples(_need(doc, "lact", "$", src), "$.lact", src)):
        if not (0 <= g < G.n_arr and 0 <= m < size):
            raise ParseError(f"{src}:$.lact[{i}]", "index out of range")
        lact[g][m] = r
    for i, (m, h, r) in enumerate(_triples(_need(doc, "ract", "$", src), "$.ract", src)):
        if not (0 <= m < size and 0 <= h < H.n_arr):
            raise ParseError(f"{src}:$.ract[{i}]", "index out of range")
        ract[m][h] = r
    try:
        return Bibundle.from_tables(G, H, size, lanchor, ranchor, lact, ract)
    except (StructureError, ValueError) as exc:
        raise ParseError(f"{src}:$", str(exc)) from exc


def _read_json(path: Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(str(path), f"cannot read file: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc


def load(path: str | Path) -> FiniteGroupoid | Bibundle:
    path = Path(path)
    doc = _read_json(path)
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "bibundle":
        return bibundle_from_doc(doc, str(path), path.parent)
    if kind == "groupoid":
        return groupoid_from_doc(doc, str(path), "$", path.parent)
    raise ParseError(f"{path}:$.kind", f"expected 'groupoid' or 'bibundle', got {kind!r}")


def load_groupoid(path: str | Path) -> FiniteGroupoid:
    obj = load(path)
    if not isinstance(obj, FiniteGroupoid):
        raise ParseError(f"{path}:$.kind", "expected a groupoid")
    return obj


def load_bibundle(path: str | Path) -> Bibundle:
    obj = load(path)
    if not isinstance(obj, Bibundle):
        raise ParseError(f"{path}:$.kind", "expected a bibundle")
    return obj


# -- writers ----------------------------------------------------------------

def groupoid_to_doc(G: FiniteGroupoid) -> dict:
    comp = [[a, b, c] for a, row in enumerate(G.comp) for b, c in enumerate(row) if c != UNDEF]
    return {
        "kind": "groupoid",
        "name": G.name,
        "n_obj": G.n_obj,
        "src": list(G.src),
        "tgt": list(G.tgt),
        "unit": list(G.unit),
        "inv": list(G.inv),
        "comp": comp,
    }


def bibundle_to_doc(B: Bibundle) -> dict:
    return {
        "kind": "bibundle",
        "left": groupoid_to_doc(B.left),
        "right": groupoid_to_doc(B.right),
        "size": B.size,
        "lanchor": list(B.lanchor),
        "ranchor": list(B.ranchor),
        "lact": [[g, m, r] for g, row in enumerate(B.lact) for m, r in enumerate(row) if r != UNDEF],
        "ract": [[m, h, r] for m, row in enumerate(B.ract) for h, r in enumerate(row) if r != UNDEF],
    }


def _float(x: float, digits: int = 12) -> float:
    v = round(float(x), digits)
    return 0.0 if v == 0 else v


def algebra_to_doc(A: FinCStar, seed: int = 0) -> dict:
    """Exact structure constants plus the numeric block embedding."""
    W = A.wedderburn(seed=seed)
    embed = []
    for k in range(A.dim):
        blocks = [W.images[b][k] for b in range(W.n_blocks)]
        embed.append([[[[_float(z.real), _float(z.imag)] for z in row] for row in blk] for blk in blocks])
    return {
        "kind": "algebra",
        "label": A.label,
        "classical": A.meta.get("classical"),
        "dim": A.dim,
        "dimension_vector": list(W.dimension_vector),
        "mult": [[i, j, [[k, encode(c)] for k, c in sorted(v.items())]] for (i, j), v in sorted(A.mult.items())],
        "invol": [[[k, encode(c)] for k, c in sorted(v.items())] for v in A.invol],
        "embed": embed,
        "embed_residual": float(f"{W.residual:.3e}"),
    }


def bimodule_to_doc(E: HilbertBimodule) -> dict:
    return E.to_json()


def round_floats(obj: Any, digits: int = 10) -> Any:
    if isinstance(obj, float):
        return _float(obj, digits)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.generic):
        return round_floats(obj.item(), digits)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(round_floats(obj), sort_keys=True, indent=1)
