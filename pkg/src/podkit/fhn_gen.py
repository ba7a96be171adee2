"""Snapshot generators: a stiff excitable-media solver and synthetic instances.

The PDE test problem is a FitzHugh-Nagumo system on the unit interval,

    u_t = mu u_xx - v / mu + f(u) / mu + c / mu,      f(u) = u (u - 0.1) (1 - u),
    v_t = b u - gamma v + c,

with homogeneous initial data, a prescribed boundary slope
u_x(t, 0) = -50000 t^3 exp(-15 t) feeding an impulse in from the left end,
and a zero slope at the right end.  Space is discretized by piecewise linear
finite elements with the nonlinearity interpolated at the nodes; time by a
fixed-step two-stage L-stable singly diagonally implicit Runge-Kutta scheme
with Newton iteration on the cubic.

The module also builds the product state space (two L^2 components), the
block derivative map into elementwise constants, identity-embedding instances
between the L^2 and H^1 inner products on one mesh, and seeded random
instances used by the property suites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, lu_factor, lu_solve

from .errors import DimensionMismatch, SolverDiverged
from .fem import assemble_fem_1d
from .gram_space import identity_space, make_space
from .linear_map import LinearMap, make_map
from .snapshot_io import from_trajectory, make_snapshot_set

SDIRK_GAMMA = 1.0 - np.sqrt(2.0) / 2.0
NEWTON_ABS_TOL = 1e-8
NEWTON_REL_TOL = 1e-6
NEWTON_MAX_ITER = 25


@dataclass
class FhnConfig:
    """Model and discretization parameters for the excitable-media run."""

    mu: float = 0.015
    b: float = 0.5
    gamma_param: float = 2.0
    c: float = 0.05
    nodes: int = 100
    t_end: float = 10.0
    dt: float = 0.005
    boundary_drive: bool = True


def boundary_pulse(t):
    """Magnitude of the prescribed influx at the left end."""
    return 50000.0 * t**3 * np.exp(-15.0 * t)


def solve_fhn(config):
    """Integrate the system; returns (time grid, states of shape (2n, steps+1)).

    The state stacks the nodal values of u over those of v.  With the source
    c = 0 and the boundary drive disabled the zero state is stationary and
    the trajectory stays identically zero.
    """
    mesh = assemble_fem_1d(config.nodes)
    n = mesh.nodes
    M = mesh.mass
    S = mesh.stiffness
    mu = config.mu
    b = config.b
    gam = config.gamma_param
    c = config.c

    steps = int(round(config.t_end / config.dt))
    if steps < 1 or abs(steps * config.dt - config.t_end) > 1e-9 * config.t_end:
        raise DimensionMismatch(
            f"dt = {config.dt} does not divide t_end = {config.t_end}"
        )
    grid = np.linspace(0.0, config.t_end, steps + 1)

    Mb = block_diag(M, M)
    e_left = np.zeros(n)
    e_left[0] = 1.0

    def rhs(t, w):
        u = w[:n]
        v = w[n:]
        fu = u * (u - 0.1) * (1.0 - u)
        out = np.empty(2 * n)
        out[:n] = -mu * (S @ u) + M @ ((-v + fu + c) / mu)
        if config.boundary_drive:
            out[:n] += mu * boundary_pulse(t) * e_left
        out[n:] = M @ (b * u - gam * v + c)
        return out

    def jacobian(w):
        u = w[:n]
        fp = -3.0 * u**2 + 2.2 * u - 0.1
        J = np.zeros((2 * n, 2 * n))
        J[:n, :n] = -mu * S + (M * fp[None, :]) / mu
        J[:n, n:] = -M / mu
        J[n:, :n] = b * M
        J[n:, n:] = -gam * M
        return J

    def stage_solve(t_stage, y_base, const, coeff, guess):
        Y = guess.copy()
        lu = lu_factor(Mb - coeff * jacobian(Y))
        for it in range(NEWTON_MAX_ITER):
            F = Mb @ (Y - y_base) - coeff * rhs(t_stage, Y) - const
            delta = lu_solve(lu, -F)
            Y += delta
            nd = np.max(np.abs(delta))
            if nd <= NEWTON_ABS_TOL + NEWTON_REL_TOL * np.max(np.abs(Y)):
                return Y
            if it in (8, 16):
                lu = lu_factor(Mb - coeff * jacobian(Y))
            if not np.all(np.isfinite(Y)):
                break
        raise SolverDiverged(f"Newton stalled at t = {t_stage:.6f}")

    h = config.dt
    gam_s = SDIRK_GAMMA
    states = np.zeros((2 * n, steps + 1))
    w = np.zeros(2 * n)
    zero = np.zeros(2 * n)
    for k in range(steps):
        tn = grid[k]
        Y1 = stage_solve(tn + gam_s * h, w, zero, h * gam_s, w)
        const = h * (1.0 - gam_s) * rhs(tn + gam_s * h, Y1)
        w = stage_solve(tn + h, w, const, h * gam_s, Y1)
        states[:, k + 1] = w
    return grid, states


def make_product_space(nodes):
    """L^2 x L^2 Gram matrix for the stacked state [u; v]."""
    mesh = assemble_fem_1d(nodes)
    return make_space(block_diag(mesh.mass, mesh.mass), label="l2_product")


def make_derivative_codomain(nodes, blocks=1):
    """Elementwise-constant space with element-length weights."""
    mesh = assemble_fem_1d(nodes)
    lengths = np.tile(mesh.element_lengths, blocks)
    return make_space(np.diag(lengths), label="derivative_product" if blocks > 1 else "derivative")


def make_fhn_L(nodes):
    """Componentwise derivative map on the product state space.

    Maps nodal [u; v] to the elementwise slopes of both components; paired
    with the element-length weights the codomain norm is the exact H^1
    seminorm of the pair.  Constants lie in the kernel, so the map has no
    inverse.
    """
    mesh = assemble_fem_1d(nodes)
    domain = make_product_space(nodes)
    codomain = make_derivative_codomain(nodes, blocks=2)
    matrix = block_diag(mesh.deriv, mesh.deriv)
    return LinearMap(domain=domain, codomain=codomain, matrix=matrix, kind="derivative")


def make_fhn_instance(config=None):
    """Solve the system and package snapshots, spaces and the derivative map."""
    config = config or FhnConfig()
    grid, states = solve_fhn(config)
    space_x = make_product_space(config.nodes)
    lmap = make_fhn_L(config.nodes)
    sset = from_trajectory(grid, states, space=space_x)
    return {
        "set": sset,
        "space_x": space_x,
        "space_y": lmap.codomain,
        "map": lmap,
        "grid": grid,
        "states": states,
        "config": config,
    }


def synthetic_states(nodes, count, seed=0, n_fields=8, decay=0.45):
    """Smooth deterministic trajectory samples on the unit-interval mesh."""
    mesh = assemble_fem_1d(nodes)
    rng = np.random.default_rng(seed)
    tgrid = np.linspace(0.0, 1.0, count + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_fields)
    fields = np.stack(
        [np.cos(np.pi * m * mesh.grid) for m in range(n_fields)], axis=1
    )
    amps = np.stack(
        [
            decay**m * np.sin(2.0 * np.pi * (m + 1) * tgrid + phases[m])
            for m in range(n_fields)
        ],
        axis=0,
    )
    return tgrid, fields @ amps


def make_embedding_instance(nodes, which, count=40, seed=None):
    """Identity-embedding instance between the L^2 and H^1 inner products.

    which = 1: ambient L^2, codomain H^1 (the natural embedding direction
    reversed: the map is the identity, only the norms change).
    which = 2: ambient H^1, codomain L^2.
    which = 3: variant of 1 that also carries the H^1 bilinear form for the
    form-determined projection family.

    Returns a dict with the snapshot set (attached to the ambient space),
    both spaces, the certified-invertible identity map, and the form (or
    None).
    """
    if which not in (1, 2, 3):
        raise DimensionMismatch(f"embedding instance must be 1, 2 or 3, got {which}")
    mesh = assemble_fem_1d(nodes)
    l2 = make_space(mesh.mass, label="fem_l2")
    h1 = make_space(mesh.stiffness + mesh.mass, label="fem_h1")
    if which == 2:
        space_x, space_y = h1, l2
    else:
        space_x, space_y = l2, h1
    eye = np.eye(nodes)
    lmap = make_map(space_x, space_y, eye, inverse=eye.copy(), kind="embedding")
    form = (mesh.stiffness + mesh.mass) if which == 3 else None
    if seed is None:
        seed = 100 + which
    tgrid, states = synthetic_states(nodes, count, seed=seed)
    sset = from_trajectory(tgrid, states, space=space_x)
    return {
        "set": sset,
        "space_x": space_x,
        "space_y": space_y,
        "map": lmap,
        "form": form,
    }


def _random_spd_space(rng, dim, label):
    A = rng.standard_normal((dim, dim))
    return make_space((A.T @ A + dim * np.eye(dim)) / dim, label=label)


def _random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))[None, :]


def random_instance(
    dim,
    s,
    seed,
    invertible=True,
    dim_y=None,
    map_rank=None,
    data_rank=None,
    kind="discrete",
):
    """Seeded random weighted-POD instance with a controlled spectrum.

    Data columns are synthesized from an exact-rank SVD with log-uniform
    singular values, so the numerical rank is unambiguous; Gram matrices are
    random SPD with eigenvalues of order one; invertible maps are random
    orthogonal-diagonal-orthogonal products with condition at most four.
    Rank-deficient or rectangular maps are produced by the matching knobs.

    Returns a dict with the snapshot set, both spaces, and the map.
    """
    rng = np.random.default_rng(seed)
    space_x = _random_spd_space(rng, dim, "random_x")
    dim_y = dim if dim_y is None else dim_y
    space_y = _random_spd_space(rng, dim_y, "random_y")

    rk = min(dim, s) if data_rank is None else min(data_rank, dim, s)
    U = _random_orthogonal(rng, dim)[:, :rk]
    V = _random_orthogonal(rng, s)[:, :rk]
    sv = np.exp(rng.uniform(np.log(0.3), np.log(3.0), rk))
    data = U @ (sv[:, None] * V.T)

    if invertible:
        if dim_y != dim:
            raise DimensionMismatch("invertible instances need equal dimensions")
        d = np.exp(rng.uniform(np.log(0.5), np.log(2.0), dim))
        matrix = _random_orthogonal(rng, dim) @ (
            d[:, None] * _random_orthogonal(rng, dim).T
        )
        lmap = make_map(space_x, space_y, matrix, invertible=True)
    else:
        mrk = min(dim, dim_y) if map_rank is None else min(map_rank, dim, dim_y)
        d = np.exp(rng.uniform(np.log(0.5), np.log(2.0), mrk))
        matrix = _random_orthogonal(rng, dim_y)[:, :mrk] @ (
            d[:, None] * _random_orthogonal(rng, dim)[:, :mrk].T
        )
        lmap = make_map(space_x, space_y, matrix)

    if kind == "continuous":
        t0 = np.cumsum(rng.uniform(0.05, 1.0, s + 1))
        grid = t0 - t0[0]
        sset = make_snapshot_set(
            data, np.diff(grid), kind="continuous", grid=grid, space=space_x
        )
    else:
        weights = rng.uniform(0.5, 2.0, s)
        sset = make_snapshot_set(data, weights, kind="discrete", space=space_x)
    return {"set": sset, "space_x": space_x, "space_y": space_y, "map": lmap}
