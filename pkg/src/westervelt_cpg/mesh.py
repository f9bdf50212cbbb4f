"""1D finite element spaces with Gauss-Lobatto nodal layout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import legendre


def gauss_lobatto(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto points and weights on [0, 1] with k + 1 points."""
    if k < 1:
        raise ValueError("Gauss-Lobatto rule needs k >= 1")
    if k == 1:
        x = np.array([-1.0, 1.0])
    else:
        interior = legendre.Legendre.basis(k).deriv().roots()
        x = np.concatenate(([-1.0], np.sort(interior.real), [1.0]))
    pk = legendre.legval(x, [0] * k + [1])
    w = 2.0 / (k * (k + 1) * pk**2)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1] with n points."""
    x, w = legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def lagrange_basis(nodes, x) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the Lagrange basis on ``nodes`` at ``x``.

    Returns two arrays of shape ``(len(x), len(nodes))``.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(nodes)
    val = np.ones((len(x), m))
    der = np.zeros((len(x), m))
    for j in range(m):
        others = [nodes[i] for i in range(m) if i != j]
        denom = np.prod([nodes[j] - o for o in others])
        for o in others:
            val[:, j] *= x - o
        for skip in range(m - 1):
            term = np.ones_like(x)
            for i, o in enumerate(others):
                if i != skip:
                    term = term * (x - o)
            der[:, j] += term
        val[:, j] /= denom
        der[:, j] /= denom
    return val, der


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Interval mesh carrying the continuous degree-k Lagrange space.

    Global node ``e * k + j`` is local node ``j`` of element ``e``; interface
    nodes are shared between neighbouring elements.
    """

    element_boundaries: np.ndarray
    degree_k: int
    global_nodes: np.ndarray
    reference_nodes: np.ndarray
    reference_weights: np.ndarray

    @classmethod
    def from_boundaries(cls, boundaries, k: int) -> "Mesh1D":
        b = np.asarray(boundaries, dtype=float)
        if b.ndim != 1 or len(b) < 2:
            raise ValueError("need at least two element boundaries")
        if k < 1:
            raise ValueError(f"polynomial degree must be >= 1, got {k}")
        h = np.diff(b)
        if np.any(h <= 0):
            raise ValueError("element boundaries must be strictly increasing")
        r, w = gauss_lobatto(k)
        nodes = (b[:-1, None] + h[:, None] * r[None, :-1]).ravel()
        nodes = np.append(nodes, b[-1])
        for arr in (b, nodes, r, w):
            arr.setflags(write=False)
        return cls(b, int(k), nodes, r, w)

    @property
    def domain_left(self) -> float:
        return float(self.element_boundaries[0])

    @property
    def domain_right(self) -> float:
        return float(self.element_boundaries[-1])

    @property
    def length(self) -> float:
        return self.domain_right - self.domain_left

    @property
    def num_elements(self) -> int:
        return len(self.element_boundaries) - 1

    @property
    def num_nodes(self) -> int:
        return len(self.global_nodes)

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.element_boundaries)

    @property
    def h(self) -> float:
        return float(self.element_sizes.max())

    def element_dofs(self) -> np.ndarray:
        """Global node indices of each element, shape (num_elements, k+1)."""
        k = self.degree_k
        return np.arange(self.num_elements)[:, None] * k + np.arange(k + 1)[None, :]


def build_uniform_mesh(a: float, b: float, num_elements: int, k: int) -> Mesh1D:
    if not a < b:
        raise ValueError(f"empty domain ({a}, {b})")
    if num_elements < 1 or k < 1:
        raise ValueError("num_elements and k must be positive")
    return Mesh1D.from_boundaries(np.linspace(a, b, num_elements + 1), k)


def interpolate(mesh: Mesh1D, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Nodal interpolant of ``f``; ``f`` is called once on the node array."""
    vals = np.asarray(f(mesh.global_nodes), dtype=float)
    return np.broadcast_to(vals, mesh.global_nodes.shape).copy()


def evaluate_field(mesh: Mesh1D, u, x):
    """Evaluate the finite element function with nodal values ``u`` at ``x``."""
    u = np.asarray(u, dtype=float)
    if u.shape != mesh.global_nodes.shape:
        raise ValueError("field length does not match the mesh")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a, b = mesh.domain_left, mesh.domain_right
    if np.any((x < a) | (x > b)):
        raise ValueError(f"evaluation point outside [{a}, {b}]")
    bnd = mesh.element_boundaries
    e = np.clip(np.searchsorted(bnd, x, side="right") - 1, 0, mesh.num_elements - 1)
    r = (x - bnd[e]) / (bnd[e + 1] - bnd[e])
    phi, _ = lagrange_basis(mesh.reference_nodes, r)
    out = np.sum(phi * u[mesh.element_dofs()[e]], axis=1)
    return float(out[0]) if scalar else out
