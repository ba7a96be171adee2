import numpy as np
import pytest

from podkit.errors import (
    DimensionMismatch,
    NegativeQuadraticForm,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
)
from podkit.gram_space import (
    GramSpace,
    adjoint_matrix,
    half_weight,
    half_weight_inv,
    identity_space,
    inner,
    make_space,
    norm,
    orthonormalize,
    solve_gram,
)


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return (A.T @ A + n * np.eye(n)) / n


def test_inner_hand_value():
    space = make_space([[2.0, 1.0], [1.0, 3.0]])
    u = np.array([1.0, 2.0])
    v = np.array([-1.0, 1.0])
    # v^T G u with G u = (4, 7)
    assert inner(space, u, v) == pytest.approx(3.0)
    assert norm(space, u) ** 2 == pytest.approx(float(u @ (space.gram @ u)))


def test_inner_matrix_arguments():
    rng = np.random.default_rng(0)
    space = make_space(random_spd(rng, 5))
    U = rng.standard_normal((5, 3))
    V = rng.standard_normal((5, 2))
    M = inner(space, U, V)
    assert M.shape == (2, 3)
    for i in range(2):
        for j in range(3):
            assert M[i, j] == pytest.approx(inner(space, U[:, j], V[:, i]))


def test_make_space_rejects_asymmetry():
    with pytest.raises(NotSymmetric):
        make_space([[1.0, 0.1], [0.0, 1.0]])


def test_make_space_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        make_space([[1.0, 2.0], [2.0, 1.0]])


def test_make_space_rejects_nonsquare():
    with pytest.raises(DimensionMismatch):
        make_space(np.ones((2, 3)))


def test_norm_clamps_tiny_negative():
    # direct construction bypasses validation so an indefinite "gram" can probe
    # the round-off guard on the quadratic form.
    eps = 1e-16
    G = np.diag([1.0, -eps])
    space = GramSpace(dim=2, gram=G, chol=np.eye(2))
    assert norm(space, np.array([0.0, 1.0])) == 0.0
    with pytest.raises(NegativeQuadraticForm):
        norm(GramSpace(dim=2, gram=np.diag([1.0, -1.0]), chol=np.eye(2)), np.array([0.0, 1.0]))


def test_half_weight_isometry():
    rng = np.random.default_rng(3)
    for trial in range(10):
        n = int(rng.integers(2, 12))
        space = make_space(random_spd(rng, n))
        u = rng.standard_normal(n)
        assert np.linalg.norm(half_weight(space, u)) == pytest.approx(norm(space, u))
        assert np.allclose(half_weight_inv(space, half_weight(space, u)), u)


def test_solve_gram_inverts():
    rng = np.random.default_rng(4)
    space = make_space(random_spd(rng, 7))
    rhs = rng.standard_normal(7)
    assert np.allclose(space.gram @ solve_gram(space, rhs), rhs)


def test_orthonormalize_hand_example():
    # euclidean MGS of [[1,1],[0,1]] gives e1 and e2
    space = identity_space(2)
    Q = orthonormalize(space, np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(Q, np.eye(2))


def test_orthonormalize_weighted():
    rng = np.random.default_rng(5)
    for seed in range(8):
        r = np.random.default_rng(seed)
        n = int(r.integers(3, 10))
        k = int(r.integers(1, n + 1))
        space = make_space(random_spd(r, n))
        Q = orthonormalize(space, r.standard_normal((n, k)))
        assert np.allclose(inner(space, Q, Q), np.eye(k), atol=1e-12)
    del rng


def test_orthonormalize_rank_deficient():
    space = identity_space(3)
    V = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(RankDeficient):
        orthonormalize(space, V)


def test_adjoint_diagonal_oracle():
    # with diagonal grams the adjoint matrix is d_from^{-1} A^T d_to entrywise
    d_from = np.array([1.0, 2.0, 4.0])
    d_to = np.array([3.0, 5.0])
    sf = make_space(np.diag(d_from))
    st = make_space(np.diag(d_to))
    A = np.arange(6, dtype=float).reshape(2, 3) + 1.0
    Astar = adjoint_matrix(sf, st, A)
    ref = (A.T * d_to[None, :]) / d_from[:, None]
    assert np.allclose(Astar, ref)


def test_adjoint_pairing_and_involution():
    rng = np.random.default_rng(11)
    sf = make_space(random_spd(rng, 4))
    st = make_space(random_spd(rng, 6))
    A = rng.standard_normal((6, 4))
    Astar = adjoint_matrix(sf, st, A)
    u = rng.standard_normal(4)
    v = rng.standard_normal(6)
    assert inner(st, A @ u, v) == pytest.approx(inner(sf, u, Astar @ v))
    # (T*)* = T
    assert np.allclose(adjoint_matrix(st, sf, Astar), A, atol=1e-10)


def test_dimension_checks():
    space = identity_space(3)
    with pytest.raises(DimensionMismatch):
        norm(space, np.ones(4))
    with pytest.raises(DimensionMismatch):
        inner(space, np.ones(3), np.ones(2))
