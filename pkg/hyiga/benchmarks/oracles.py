"""Classical bilinear quadrilateral (Q4) elements coded independently of the NURBS machinery.

Degree-one NURBS with unit weights reduce to the bilinear Lagrange basis, so these routines
serve as oracles for the conventional and the 5-parameter hybrid stiffness.
"""
import math
from typing import Tuple

import numpy as np

from hyiga.material import Material

__all__ = ["q4_element_stiffness", "q4_global_stiffness"]

_GAUSS = (-1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0))
# local node order: (-1,-1), (1,-1), (-1,1), (1,1)
_SIGNS = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])


def _shape_derivatives(xi: float, eta: float) -> np.ndarray:
    d_xi = _SIGNS[:, 0] * (1.0 + _SIGNS[:, 1] * eta) / 4.0
    d_eta = _SIGNS[:, 1] * (1.0 + _SIGNS[:, 0] * xi) / 4.0
    return np.stack([d_xi, d_eta])


def _stress_transformation(J: np.ndarray) -> np.ndarray:
    a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
    return np.array(
        [
            [a * a, c * c, 2 * a * c],
            [b * b, d * d, 2 * b * d],
            [a * b, c * d, a * d + b * c],
        ]
    )


def q4_element_stiffness(xy: np.ndarray, material: Material, hybrid: bool = False) -> np.ndarray:
    """8x8 stiffness of a bilinear quadrilateral with 2x2 Gauss integration.

    ``xy`` holds the four corner nodes in the order (-1,-1), (1,-1), (-1,1), (1,1).
    """
    C = material.stiffness_matrix().numpy()
    S = material.compliance_matrix().numpy()
    K = np.zeros((8, 8))
    G = np.zeros((5, 8))
    H = np.zeros((5, 5))
    for eta in _GAUSS:
        for xi in _GAUSS:
            dN = _shape_derivatives(xi, eta)
            J = dN @ xy
            det = np.linalg.det(J)
            dN_dx = np.linalg.solve(J, dN)
            B = np.zeros((3, 8))
            B[0, 0::2] = dN_dx[0]
            B[1, 1::2] = dN_dx[1]
            B[2, 0::2] = dN_dx[1]
            B[2, 1::2] = dN_dx[0]
            if not hybrid:
                K += B.T @ C @ B * det
                continue
            P = np.array(
                [
                    [1.0, eta, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, xi, 0.0],
                    [0.0, 0.0, 0.0, 0.0, 1.0],
                ]
            )
            TP = _stress_transformation(J) @ P
            G += TP.T @ B * det
            H += TP.T @ S @ TP * det
    if hybrid:
        K = G.T @ np.linalg.solve(H, G)
    return (K + K.T) / 2


def q4_global_stiffness(
    nodes: np.ndarray, shape: Tuple[int, int], material: Material, hybrid: bool = False
) -> np.ndarray:
    """Dense global stiffness of a structured ``(nx - 1) x (ny - 1)`` Q4 mesh.

    ``nodes`` is ``[nx * ny, 2]`` with the x index fastest; dofs are interleaved ``(u_x, u_y)``.
    """
    nx, ny = shape
    K = np.zeros((2 * nx * ny, 2 * nx * ny))
    for j in range(ny - 1):
        for i in range(nx - 1):
            corners = [j * nx + i, j * nx + i + 1, (j + 1) * nx + i, (j + 1) * nx + i + 1]
            dofs = np.array([[2 * n, 2 * n + 1] for n in corners]).reshape(-1)
            K[np.ix_(dofs, dofs)] += q4_element_stiffness(nodes[corners], material, hybrid)
    return K
