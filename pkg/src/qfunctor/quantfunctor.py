"""The quantization functor on finite groupoids.

Objects go to convolution algebras, principal bibundles to Hilbert bimodules
on the functions over the carrier (counting-measure transcription of the
Muhly-Renault-Williams construction).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cstar import DEFAULT_TOL, FinCStar, convolution_algebra
from .exact import ONE
from .groupoid import (
    UNDEF,
    Bibundle,
    FiniteGroupoid,
    compose_bibundles,
    is_biprincipal,
    is_principal,
)
from .hilbmod import (
    HilbertBimodule,
    interior_tensor,
    make_bimodule,
    morita_report,
    multiplicity_matrix,
    unitary_equivalent,
)


class NotPrincipalError(ValueError):
    pass


def quantize_object(G: FiniteGroupoid) -> FinCStar:
    """``C*(G)``; the classical object it quantizes is recorded as ``meta['classical']``."""
    # groupoid equality ignores the name, the label does not
    return _quantize_object(G, G.name)


@lru_cache(maxsize=256)
def _quantize_object(G: FiniteGroupoid, name: str) -> FinCStar:
    A = convolution_algebra(G)
    A.meta["classical"] = f"A*({name or 'G'})"
    A.meta["groupoid"] = G
    return A


def quantize_arrow(M: Bibundle, tol: float = DEFAULT_TOL) -> HilbertBimodule:
    """Hilbert ``C*(G)``-``C*(H)`` bimodule of a principal bibundle.

    On point masses: ``d_g . d_m = d_{g.m}``, ``d_m . d_h = d_{m.h}`` and
    ``<d_m1, d_m2> = d_h`` for the unique ``h`` with ``m1.h = m2``.
    """
    if not is_principal(M):
        raise NotPrincipalError("quantize_arrow needs a principal bibundle")
    G, H = M.left, M.right
    lact = {(g, m): {M.lact[g][m]: ONE} for g in range(G.n_arr) for m in range(M.size) if M.lact[g][m] != UNDEF}
    ract = {(m, h): {M.ract[m][h]: ONE} for m in range(M.size) for h in range(H.n_arr) if M.ract[m][h] != UNDEF}
    ip = {}
    for m1 in range(M.size):
        for h in range(H.n_arr):
            m2 = M.ract[m1][h]
            if m2 != UNDEF:
                ip[(m1, m2)] = {h: ONE}
    return make_bimodule(quantize_object(G), quantize_object(H), M.size, lact, ract, ip,
                         label=f"Q[{G.name}->{H.name}]", tol=tol)


def _mat(m) -> list[list[int]]:
    return [list(r) for r in m.entries]


@dataclass
class FunctorialityReport:
    ok: bool
    composite_dim: int
    tensor_dim: int
    lhs_multiplicity: list
    rhs_multiplicity: list
    witness_residual: float | None
    witness: object = field(default=None, repr=False)
    counterexample: dict | None = None

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "composite_dim": self.composite_dim,
            "tensor_dim": self.tensor_dim,
            "lhs_multiplicity": self.lhs_multiplicity,
            "rhs_multiplicity": self.rhs_multiplicity,
            "witness_residual": None if self.witness_residual is None else float(f"{self.witness_residual:.3e}"),
            "counterexample": self.counterexample,
        }


def check_functoriality(M: Bibundle, N: Bibundle, tol: float = DEFAULT_TOL) -> FunctorialityReport:
    """Compare ``Q(M (*) N)`` with ``Q(M) (x) Q(N)`` up to a validated unitary."""
    lhs = quantize_arrow(compose_bibundles(M, N), tol)
    rhs = interior_tensor(quantize_arrow(M, tol), quantize_arrow(N, tol), tol)
    mL, mR = multiplicity_matrix(lhs), multiplicity_matrix(rhs)
    U = unitary_equivalent(lhs, rhs, tol)
    report = FunctorialityReport(
        ok=U is not None,
        composite_dim=lhs.dim,
        tensor_dim=rhs.dim,
        lhs_multiplicity=_mat(mL),
        rhs_multiplicity=_mat(mR),
        witness_residual=None if U is None else U.residual,
        witness=U,
    )
    if U is None:
        report.counterexample = {"composite": lhs.to_json(), "tensor": rhs.to_json()}
    return report


def check_identity(G: FiniteGroupoid) -> bool:
    """``Q(id_G)`` equals the canonical bimodule of ``C*(G)`` tensor by tensor."""
    from .cstar import canonical_bimodule
    from .groupoid import identity_bibundle

    E = quantize_arrow(identity_bibundle(G))
    C = canonical_bimodule(quantize_object(G))
    return E.dim == C.dim and E.lact == C.lact and E.ract == C.ract and E.ip == C.ip


@dataclass
class MoritaReport:
    status: str  # "preserved", "failed" or "out of hypothesis"
    details: dict

    @property
    def ok(self) -> bool:
        return self.status != "failed"


def check_morita_preservation(M: Bibundle) -> MoritaReport:
    """For a biprincipal ``M``, ``Q(M)`` must be an imprimitivity bimodule."""
    if not is_biprincipal(M):
        return MoritaReport("out of hypothesis", {"biprincipal": False})
    rep = morita_report(quantize_arrow(M))
    return MoritaReport("preserved" if rep["imprimitivity"] else "failed", rep)


def bimodule_matrix(U) -> np.ndarray:
    return np.asarray(U.matrix)
