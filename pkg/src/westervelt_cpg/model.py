"""Westervelt model: parameters, state, discrete energy and dissipation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import LumpedInner
from .errors import DegeneracyError
from .mesh import gauss_legendre, gauss_lobatto, lagrange_basis

# margin below which 1 - 2*beta*p counts as degenerate
DELTA_DEG = 1e-8


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")


@dataclass(frozen=True, eq=False)
class State:
    psi: np.ndarray
    p: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if np.shape(self.psi) != np.shape(self.p):
            raise ValueError("psi and p must live on the same mesh")


@dataclass
class EnergyLedger:
    """Discrete energy per time level plus dissipation over each step."""

    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    dissipation_increments: list = field(default_factory=list)

    def start(self, t: float, energy: float):
        self.times = [t]
        self.energies = [energy]
        self.dissipation_increments = []

    def record(self, t: float, energy: float, dissipation: float):
        self.times.append(t)
        self.energies.append(energy)
        self.dissipation_increments.append(dissipation)

    def cumulative_dissipation(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.dissipation_increments)))

    def drift(self) -> np.ndarray:
        e = np.asarray(self.energies)
        return np.abs(e - e[0])

    def balance_residual(self) -> np.ndarray:
        """|E(t^n) - E(0) + sum of dissipation up to t^n| for every n."""
        e = np.asarray(self.energies)
        return np.abs(e - e[0] + self.cumulative_dissipation())


def discrete_energy(mesh, K, w: LumpedInner, params: ModelParams, s: State) -> float:
    """E_h = 1/2 psi^T K psi + sum_i w_i (1/2 - 2 beta p_i / 3) p_i^2."""
    psi = np.asarray(s.psi, dtype=float)
    p = np.asarray(s.p, dtype=float)
    if psi.shape != (mesh.num_nodes,) or len(w) != mesh.num_nodes:
        raise ValueError("state does not match the mesh")
    kinetic = 0.5 * psi @ (K @ psi)
    potential = np.sum(w.weights * (0.5 - 2.0 * params.beta / 3.0 * p) * p * p)
    return float(kinetic + potential)


def degeneracy_margin(p, params: ModelParams) -> float:
    return float(np.min(1.0 - 2.0 * params.beta * np.asarray(p)))


def check_degeneracy(c, where: str = ""):
    """Raise DegeneracyError if any value of 1 - 2 beta p is <= DELTA_DEG."""
    m = float(np.min(c))
    if not m > DELTA_DEG:
        raise DegeneracyError(f"1 - 2*beta*p reached {m:.3e}{where}")


def dissipation_increment(K, slab, params: ModelParams) -> float:
    """alpha * integral over the slab of (d/dt psi)^T K (d/dt psi).

    ``slab`` supplies ``psi`` values at the q+1 Gauss-Lobatto time nodes and
    the signed step ``tau``; q Gauss points integrate the degree 2q-2
    integrand exactly.
    """
    if params.alpha == 0.0:
        return 0.0
    psi = np.asarray(slab.psi)
    q = psi.shape[0] - 1
    s_nodes, _ = gauss_lobatto(q)
    g, wg = gauss_legendre(q)
    _, dl = lagrange_basis(s_nodes, g)
    dpsi = dl @ psi / slab.tau
    kd = (K @ dpsi.T).T
    return float(params.alpha * slab.tau * np.sum(wg * np.sum(dpsi * kd, axis=1)))
