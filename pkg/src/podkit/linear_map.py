"""Linear maps between Gram spaces.

A map carries its domain and codomain spaces so adjoints are always taken
with respect to the right inner products.  Invertibility is a certificate,
not a guess: an inverse is either supplied or computed, and in both cases the
two residuals ||L Linv - I|| and ||Linv L - I|| must pass below tolerance,
with overly ill-conditioned matrices rejected outright.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gram_space
from .errors import DimensionMismatch, NotInvertible, ProvenanceMismatch
from .gram_space import GramSpace
from .snapshot_io import SnapshotSet, make_snapshot_set

INVERSE_RESIDUAL_TOL = 1e-8
MAX_CONDITION = 1e12


@dataclass
class LinearMap:
    """Map between two Gram spaces with optional certified inverse.

    Attributes
    ----------
    domain, codomain : GramSpace
    matrix : ndarray, shape (codomain.dim, domain.dim)
    inverse : ndarray or None
        Present only when certified at construction.
    kind : str
        Free-form tag ("identity", "derivative", "embedding", ...).
    """

    domain: GramSpace
    codomain: GramSpace
    matrix: np.ndarray
    inverse: np.ndarray | None = field(default=None, repr=False)
    kind: str = "general"

    @property
    def invertible(self):
        return self.inverse is not None


def _certify_inverse(matrix, inverse):
    n = matrix.shape[0]
    eye = np.eye(n)
    res_right = np.linalg.norm(matrix @ inverse - eye)
    res_left = np.linalg.norm(inverse @ matrix - eye)
    if res_right > INVERSE_RESIDUAL_TOL or res_left > INVERSE_RESIDUAL_TOL:
        raise NotInvertible(
            f"inverse residuals {res_right:.3e} / {res_left:.3e} "
            f"exceed {INVERSE_RESIDUAL_TOL:.0e}"
        )


def make_map(domain, codomain, matrix, invertible=False, inverse=None, kind="general"):
    """Build a LinearMap, certifying the inverse when one is wanted.

    Parameters
    ----------
    domain, codomain : GramSpace
    matrix : array_like, shape (codomain.dim, domain.dim)
    invertible : bool
        Compute and certify an inverse.  Square matrices only; condition
        numbers above 1e12 are rejected.
    inverse : array_like, optional
        Explicit inverse to certify instead of computing one.
    kind : str
    """
    A = np.asarray(matrix, dtype=float)
    if A.shape != (codomain.dim, domain.dim):
        raise DimensionMismatch(
            f"matrix {A.shape} between spaces of dims "
            f"{domain.dim} -> {codomain.dim}"
        )
    inv = None
    if inverse is not None:
        inv = np.asarray(inverse, dtype=float)
        if A.shape[0] != A.shape[1] or inv.shape != A.shape:
            raise NotInvertible("explicit inverse requires matching square matrices")
        _certify_inverse(A, inv)
    elif invertible:
        if A.shape[0] != A.shape[1]:
            raise NotInvertible(f"non-square map {A.shape} cannot be inverted")
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NotInvertible(f"condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")
        inv = np.linalg.solve(A, np.eye(A.shape[0]))
        _certify_inverse(A, inv)
    return LinearMap(domain=domain, codomain=codomain, matrix=A, inverse=inv, kind=kind)


def identity_map(domain, codomain=None, kind="identity"):
    """Identity-matrix map, by default an embedding between equal-dim spaces."""
    if codomain is None:
        codomain = domain
    if codomain.dim != domain.dim:
        raise DimensionMismatch("identity map needs equal dimensions")
    eye = np.eye(domain.dim)
    return LinearMap(domain, codomain, eye, inverse=eye.copy(), kind=kind)


def apply(lmap, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != lmap.domain.dim:
        raise DimensionMismatch(
            f"vector of dim {x.shape[0]} into map from dim {lmap.domain.dim}"
        )
    return lmap.matrix @ x


def apply_inverse(lmap, y):
    if lmap.inverse is None:
        raise NotInvertible("map has no certified inverse")
    y = np.asarray(y, dtype=float)
    if y.shape[0] != lmap.codomain.dim:
        raise DimensionMismatch(
            f"vector of dim {y.shape[0]} into inverse from dim {lmap.codomain.dim}"
        )
    return lmap.inverse @ y


def adjoint(lmap):
    """Matrix of the adjoint map codomain -> domain."""
    return gram_space.adjoint_matrix(lmap.domain, lmap.codomain, lmap.matrix)


def inverse_adjoint(lmap):
    """Matrix of the adjoint of the inverse, domain -> codomain."""
    if lmap.inverse is None:
        raise NotInvertible("map has no certified inverse")
    return gram_space.adjoint_matrix(lmap.codomain, lmap.domain, lmap.inverse)


def induced_snapshots(lmap, sset):
    """Push a snapshot set through the map; weights and kind are preserved."""
    if sset.space_dim != lmap.domain.dim:
        raise DimensionMismatch(
            f"snapshots of dim {sset.space_dim} through map from dim {lmap.domain.dim}"
        )
    return make_snapshot_set(
        lmap.matrix @ sset.data,
        sset.weights.copy(),
        kind=sset.kind,
        grid=None if sset.grid is None else sset.grid.copy(),
        space=lmap.codomain,
    )


def full_rank_in(basis, space):
    """Whether the POD rank exhausts the ambient dimension.

    Equivalent to every eigenvalue of the data correlation operator being
    numerically nonzero.
    """
    return basis.rank == space.dim


def is_surjective(lmap, rtol=1e-12):
    """Numerical surjectivity: the matrix has full row rank."""
    sv = np.linalg.svd(lmap.matrix, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return lmap.codomain.dim == 0
    return int(np.sum(sv > rtol * sv[0])) == lmap.codomain.dim


def rank_relation_check(basis_x, basis_y, lmap):
    """Compare the POD ranks of a set and its image under the map.

    The image rank can never exceed the source rank; with a certified
    invertible map the two are equal.  The two bases must come from a set
    and its induced set, decomposed at the same drop tolerance.

    Returns a report dict with both ranks and the verdicts.
    """
    if basis_x.drop_tol != basis_y.drop_tol:
        raise ProvenanceMismatch(
            f"bases decomposed at different drop tolerances: "
            f"{basis_x.drop_tol} vs {basis_y.drop_tol}"
        )
    if basis_x.space.dim != lmap.domain.dim or basis_y.space.dim != lmap.codomain.dim:
        raise DimensionMismatch("bases do not live on the map's domain/codomain")
    report = {
        "rank_source": basis_x.rank,
        "rank_image": basis_y.rank,
        "inequality_holds": basis_y.rank <= basis_x.rank,
        "invertible": lmap.invertible,
        "equality_expected": lmap.invertible,
        "equality_holds": basis_y.rank == basis_x.rank,
        "surjective": is_surjective(lmap),
        "image_full_rank": full_rank_in(basis_y, lmap.codomain),
    }
    report["passed"] = report["inequality_holds"] and (
        not report["equality_expected"] or report["equality_holds"]
    )
    return report
