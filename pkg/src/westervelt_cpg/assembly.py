"""Stiffness assembly and the mass-lumped inner product."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh1D, gauss_legendre, lagrange_basis


def _reference_stiffness(mesh: Mesh1D) -> np.ndarray:
    # k Gauss points integrate the degree 2k-2 derivative products exactly
    g, wg = gauss_legendre(mesh.degree_k)
    _, dphi = lagrange_basis(mesh.reference_nodes, g)
    return (dphi * wg[:, None]).T @ dphi


def assemble_stiffness(mesh: Mesh1D) -> sp.csr_matrix:
    """Exact matrix of the bilinear form (u', v') on the mesh.

    The result is symmetric with half-bandwidth k and annihilates constants.
    """
    kref = _reference_stiffness(mesh)
    dofs = mesh.element_dofs()
    vals = kref[None, :, :] / mesh.element_sizes[:, None, None]
    rows = np.repeat(dofs[:, :, None], dofs.shape[1], axis=2)
    cols = np.repeat(dofs[:, None, :], dofs.shape[1], axis=1)
    n = mesh.num_nodes
    K = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))
    return K.tocsr()


@dataclass(frozen=True, eq=False)
class LumpedInner:
    """Diagonal quadrature inner product <u, v>_h = sum_i w_i u_i v_i."""

    weights: np.ndarray

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("lumped weights must be positive")

    def __len__(self):
        return len(self.weights)


def assemble_lumped_weights(mesh: Mesh1D) -> LumpedInner:
    w = np.zeros(mesh.num_nodes)
    local = mesh.element_sizes[:, None] * mesh.reference_weights[None, :]
    np.add.at(w, mesh.element_dofs(), local)
    w.setflags(write=False)
    return LumpedInner(w)


def _check_len(w: LumpedInner, *arrays):
    for arr in arrays:
        if np.ndim(arr) != 0 and np.shape(arr) != w.weights.shape:
            raise ValueError(
                f"length mismatch: expected {w.weights.shape}, got {np.shape(arr)}"
            )


def inner_h(w: LumpedInner, a, u, v) -> float:
    """Weighted lumped inner product <a u, v>_h; pass ``a=1`` for plain."""
    _check_len(w, a, u, v)
    return float(np.sum(w.weights * a * u * v))


def apply_D(w: LumpedInner, a, u) -> np.ndarray:
    """Apply the diagonal operator D(a): r_i = w_i a_i u_i."""
    _check_len(w, a, u)
    return w.weights * a * np.asarray(u, dtype=float)
