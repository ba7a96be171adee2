"""Rank-r projection operators assembled from a POD basis.

Every projector is stored in factored form, P x = range @ (dual^T G x), and
applied in O(dim * r) work; the dense matrix is only ever formed inside the
operator-norm diagnostic.  Supported families:

- "pod_orthogonal": orthogonal projection onto the leading modes.
- "mapped_orthogonal": orthogonal projection, in the codomain, onto the
  span of the mapped modes.
- "ritz": projection onto the mapped modes determined by a bilinear form
  (a(Pu, v) = a(u, v) for all v in the range).
- "pushforward": the domain projection conjugated into the codomain by an
  invertible map, L P L^{-1}.
- "pullback": a codomain projection conjugated back, L^{-1} Q L.

Provenance fingerprints record which basis, map and form each projector was
built from; composites refuse ingredients that do not match.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve

from . import linear_map as lm
from .errors import (
    DimensionMismatch,
    FormNotElliptic,
    IndexOutOfRange,
    NotInvertible,
    ProvenanceMismatch,
    RankDeficient,
    RankDeficientImage,
    RankExceeded,
    SingularRitzSystem,
)
from .gram_space import GramSpace, orthonormalize, solve_gram
from .pod_engine import basis_fingerprint

FAMILIES = ("pod_orthogonal", "mapped_orthogonal", "ritz", "pushforward", "pullback")
ELLIPTICITY_DEGENERACY = 1e-13


@dataclass
class Projector:
    """Factored rank-r projection operator on a Gram space.

    P x = range_basis @ (dual_basis^T @ (gram @ x)); idempotency follows
    from dual_basis^T G range_basis = I, which every constructor arranges.
    """

    space: GramSpace
    r: int
    range_basis: np.ndarray = field(repr=False)
    dual_basis: np.ndarray = field(repr=False)
    family: str
    provenance: dict = field(default_factory=dict)


def matrix_fingerprint(matrix):
    return hashlib.sha1(np.ascontiguousarray(matrix).tobytes()).hexdigest()[:12]


def apply_projector(proj, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != proj.space.dim:
        raise DimensionMismatch(
            f"vector of dim {x.shape[0]} under projector on dim {proj.space.dim}"
        )
    return proj.range_basis @ (proj.dual_basis.T @ (proj.space.gram @ x))


def _check_r(basis, r):
    if r < 1:
        raise IndexOutOfRange(f"truncation level must be >= 1, got {r}")
    if r > basis.rank:
        raise RankExceeded(f"requested r = {r} beyond computed rank {basis.rank}")


def pod_projector(basis, r):
    """Orthogonal projection onto the leading r POD modes."""
    _check_r(basis, r)
    Phi = basis.modes[:, :r].copy()
    return Projector(
        space=basis.space,
        r=r,
        range_basis=Phi,
        dual_basis=Phi,
        family="pod_orthogonal",
        provenance={"family": "pod_orthogonal", "basis": basis_fingerprint(basis), "r": r},
    )


def mapped_orthogonal_projector(basis, lmap, r):
    """Orthogonal projection onto the span of the mapped leading modes.

    Raises RankDeficientImage when the mapped modes are numerically
    dependent; no deflation is attempted.
    """
    _check_r(basis, r)
    if lmap.domain.dim != basis.space.dim:
        raise DimensionMismatch("map domain does not hold the POD modes")
    V = lmap.matrix @ basis.modes[:, :r]
    try:
        Q = orthonormalize(lmap.codomain, V)
    except RankDeficient as exc:
        raise RankDeficientImage(
            f"mapped modes are numerically dependent: {exc}"
        ) from None
    return Projector(
        space=lmap.codomain,
        r=r,
        range_basis=Q,
        dual_basis=Q,
        family="mapped_orthogonal",
        provenance={
            "family": "mapped_orthogonal",
            "basis": basis_fingerprint(basis),
            "map": matrix_fingerprint(lmap.matrix),
            "r": r,
        },
    )


def form_ellipticity(space, form):
    """Extreme generalized eigenvalues of the symmetric part of a form.

    Returns (c, C): the smallest and largest eigenvalues of sym(A) against
    the space's Gram matrix.  For symmetric A these are the ellipticity and
    continuity constants of a(u, v) = v^T A u.
    """
    A = np.asarray(form, dtype=float)
    if A.shape != (space.dim, space.dim):
        raise DimensionMismatch(f"form {A.shape} on space of dim {space.dim}")
    sym = 0.5 * (A + A.T)
    vals = eigh(sym, space.gram, eigvals_only=True)
    return float(vals[0]), float(vals[-1])


def ritz_projector(basis, lmap, form, r):
    """Form-determined projection onto the mapped leading modes.

    The projection P y solves a(P y, v) = a(y, v) for all v in the span of
    the mapped modes, where a(u, v) = v^T A u on the codomain.  The symmetric
    part of A must be positive definite against the codomain Gram matrix.
    """
    _check_r(basis, r)
    if lmap.domain.dim != basis.space.dim:
        raise DimensionMismatch("map domain does not hold the POD modes")
    space = lmap.codomain
    A = np.asarray(form, dtype=float)
    c_low, c_high = form_ellipticity(space, A)
    if c_low <= ELLIPTICITY_DEGENERACY * max(abs(c_high), 1e-300):
        raise FormNotElliptic(
            f"symmetric part has smallest eigenvalue {c_low:.3e} "
            f"against largest {c_high:.3e}"
        )
    V = lmap.matrix @ basis.modes[:, :r]
    B = V.T @ A @ V
    rcond = 1.0 / np.linalg.cond(B) if B.size else 0.0
    if not np.isfinite(rcond) or rcond < 1e-14:
        raise SingularRitzSystem(f"reciprocal condition {rcond:.3e}")
    try:
        lu = lu_factor(B)
    except Exception as exc:
        raise SingularRitzSystem(str(exc)) from None
    # P y = V B^{-1} V^T A y, so the dual basis is G^{-1} A^T V B^{-T}.
    VBt = lu_solve(lu, (A.T @ V).T, trans=0).T
    dual = solve_gram(space, VBt)
    return Projector(
        space=space,
        r=r,
        range_basis=V,
        dual_basis=dual,
        family="ritz",
        provenance={
            "family": "ritz",
            "basis": basis_fingerprint(basis),
            "map": matrix_fingerprint(lmap.matrix),
            "form": matrix_fingerprint(A),
            "r": r,
            "ellipticity": c_low,
            "continuity": c_high,
        },
    )


def pushforward_projector(lmap, basis, r, cross_check_tol=1e-8):
    """The mode projection conjugated into the codomain: L P L^{-1}.

    The dual vectors are the codomain representers of y -> (L^{-1} y, phi_k);
    they equal the inverse-adjoint images of the modes.  Both evaluation
    routes are assembled and must agree to cross_check_tol, which guards the
    certified inverse against a stale or inconsistent matrix.
    """
    _check_r(basis, r)
    if lmap.inverse is None:
        raise NotInvertible("pushforward projector needs an invertible map")
    if lmap.domain.dim != basis.space.dim:
        raise DimensionMismatch("map domain does not hold the POD modes")
    Phi = basis.modes[:, :r]
    V = lmap.matrix @ Phi
    # Route one: representers via the inverse matrix.
    dual_direct = solve_gram(
        lmap.codomain, lmap.inverse.T @ (basis.space.gram @ Phi)
    )
    # Route two: solve the adjoint system L* d = phi.
    dual_adjoint = np.linalg.solve(lm.adjoint(lmap), Phi)
    scale = max(np.linalg.norm(dual_direct), 1e-300)
    mismatch = np.linalg.norm(dual_direct - dual_adjoint) / scale
    if mismatch > cross_check_tol:
        raise NotInvertible(
            f"inverse and adjoint routes disagree by {mismatch:.3e}"
        )
    return Projector(
        space=lmap.codomain,
        r=r,
        range_basis=V,
        dual_basis=dual_direct,
        family="pushforward",
        provenance={
            "family": "pushforward",
            "basis": basis_fingerprint(basis),
            "map": matrix_fingerprint(lmap.matrix),
            "r": r,
        },
    )


def pullback_projector(lmap, inner_proj, r):
    """A codomain projection conjugated back to the domain: L^{-1} Q L.

    inner_proj must be a projector on the map's codomain built from the same
    map at the same truncation level; anything else raises
    ProvenanceMismatch.  When the inner projection fixes the mapped modes,
    the result fixes the modes themselves.
    """
    if lmap.inverse is None:
        raise NotInvertible("pullback projector needs an invertible map")
    if inner_proj.space.dim != lmap.codomain.dim:
        raise DimensionMismatch("inner projector does not live on the codomain")
    if inner_proj.r != r:
        raise ProvenanceMismatch(
            f"inner projector has r = {inner_proj.r}, requested {r}"
        )
    inner_map_fp = inner_proj.provenance.get("map")
    if inner_map_fp is not None and inner_map_fp != matrix_fingerprint(lmap.matrix):
        raise ProvenanceMismatch("inner projector was built from a different map")
    rng = lmap.inverse @ inner_proj.range_basis
    dual = lm.adjoint(lmap) @ inner_proj.dual_basis
    return Projector(
        space=lmap.domain,
        r=r,
        range_basis=rng,
        dual_basis=dual,
        family="pullback",
        provenance={
            "family": "pullback",
            "map": matrix_fingerprint(lmap.matrix),
            "inner": dict(inner_proj.provenance),
            "r": r,
        },
    )


def dense_matrix(proj):
    """The dim x dim matrix of the projector (diagnostics only)."""
    return proj.range_basis @ (proj.dual_basis.T @ proj.space.gram)


def op_norm(proj):
    """Operator norm of the projector in the space's own norm.

    Computed from the largest eigenvalue of the symmetric generalized
    problem P^T G P z = mu G z; the norm is sqrt(max mu).  Orthogonal
    families return 1 up to eigensolver accuracy, the form-determined family
    is bounded by its continuity-to-ellipticity ratio.
    """
    P = dense_matrix(proj)
    M = P.T @ (proj.space.gram @ P)
    M = 0.5 * (M + M.T)
    n = proj.space.dim
    vals = eigh(M, proj.space.gram, eigvals_only=True, subset_by_index=[n - 1, n - 1])
    return float(np.sqrt(max(vals[-1], 0.0)))
