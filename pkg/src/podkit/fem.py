"""Piecewise linear finite elements on a uniform 1-D mesh over [0, 1].

Element integrals are exact: on an element of length h the local mass matrix
is h/6 * [[2, 1], [1, 2]] and the local stiffness matrix is
1/h * [[1, -1], [-1, 1]].  The derivative operator maps nodal values to the
(constant) slopes on each element; paired with the diagonal Gram matrix of
element lengths it reproduces the H^1 seminorm exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FemMesh:
    """Assembled matrices for an n-node uniform mesh on [0, 1].

    Attributes
    ----------
    nodes : int
        Number of mesh nodes (n >= 2).
    h : float
        Element length 1 / (n - 1).
    grid : ndarray, shape (n,)
        Node coordinates.
    mass : ndarray, shape (n, n)
        L^2 Gram matrix of the nodal hat functions.
    stiffness : ndarray, shape (n, n)
        Gram matrix of their derivatives (singular on its own: constants).
    convection : ndarray, shape (n, n)
        First-derivative form (u', v); skew apart from boundary terms, used
        to build nonsymmetric elliptic forms.
    deriv : ndarray, shape (n - 1, n)
        Nodal values -> elementwise slopes.
    element_lengths : ndarray, shape (n - 1,)
        Quadrature weights of the elementwise-constant derivative space.
    """

    nodes: int
    h: float
    grid: np.ndarray
    mass: np.ndarray
    stiffness: np.ndarray
    convection: np.ndarray
    deriv: np.ndarray
    element_lengths: np.ndarray


def assemble_fem_1d(nodes):
    """Assemble mass, stiffness and derivative matrices for [0, 1].

    Parameters
    ----------
    nodes : int
        Number of equispaced nodes, at least 2.

    Returns
    -------
    FemMesh
    """
    n = int(nodes)
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    h = 1.0 / (n - 1)
    grid = np.linspace(0.0, 1.0, n)

    mass = np.zeros((n, n))
    stiffness = np.zeros((n, n))
    main = np.arange(n)
    mass[main, main] = 2.0 * h / 3.0
    mass[0, 0] = mass[-1, -1] = h / 3.0
    mass[main[:-1], main[:-1] + 1] = h / 6.0
    mass[main[:-1] + 1, main[:-1]] = h / 6.0

    stiffness[main, main] = 2.0 / h
    stiffness[0, 0] = stiffness[-1, -1] = 1.0 / h
    stiffness[main[:-1], main[:-1] + 1] = -1.0 / h
    stiffness[main[:-1] + 1, main[:-1]] = -1.0 / h

    convection = np.zeros((n, n))
    convection[main[:-1], main[:-1] + 1] = 0.5
    convection[main[:-1] + 1, main[:-1]] = -0.5
    convection[0, 0] = -0.5
    convection[-1, -1] = 0.5

    deriv = np.zeros((n - 1, n))
    rows = np.arange(n - 1)
    deriv[rows, rows] = -1.0 / h
    deriv[rows, rows + 1] = 1.0 / h

    return FemMesh(
        nodes=n,
        h=h,
        grid=grid,
        mass=mass,
        stiffness=stiffness,
        convection=convection,
        deriv=deriv,
        element_lengths=np.full(n - 1, h),
    )
