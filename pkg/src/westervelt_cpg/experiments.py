"""Simulation driver, error measurement and convergence studies."""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .assembly import assemble_lumped_weights, assemble_stiffness
from .errors import DegeneracyError, NewtonError
from .integrators import NewtonConfig, SlabSolution, one_step, step_cpg
from .mesh import Mesh1D, build_uniform_mesh, interpolate
from .model import EnergyLedger, ModelParams, State, discrete_energy, dissipation_increment

INTEGRATORS = ("cpg", "implicit_midpoint", "lobatto_iiia2")

Profile = Union[str, np.ndarray, Callable]

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_profile(spec: Profile, mesh: Mesh1D) -> np.ndarray:
    """Nodal values of an initial profile.

    Strings understood: ``zero``, ``constant(v)``, ``gaussian(c)`` for
    ``exp(-c x^2)``, ``gaussian(c, x0)`` for ``exp(-c (x - x0)^2)`` and
    ``samples(path)`` for one nodal value per line in a text file.
    Arrays are taken as nodal samples; callables are interpolated.
    """
    if callable(spec):
        return interpolate(mesh, spec)
    if not isinstance(spec, str):
        vals = np.asarray(spec, dtype=float)
        if vals.shape != (mesh.num_nodes,):
            raise ValueError(f"custom samples need {mesh.num_nodes} values, got {vals.shape}")
        return vals.copy()
    s = spec.strip().lower().replace(" ", "")
    if s in ("zero", "0"):
        return np.zeros(mesh.num_nodes)
    m = re.fullmatch(rf"constant\(({_NUM})\)", s)
    if m:
        return np.full(mesh.num_nodes, float(m.group(1)))
    m = re.fullmatch(rf"gaussian\(({_NUM})(?:,({_NUM}))?\)", s)
    if m:
        c, x0 = float(m.group(1)), float(m.group(2) or 0.0)
        return interpolate(mesh, lambda x: np.exp(-c * (x - x0) ** 2))
    m = re.fullmatch(r"samples\((.+)\)", spec.strip())
    if m:
        return parse_profile(np.loadtxt(m.group(1), ndmin=1), mesh)
    raise ValueError(f"unknown initial profile {spec!r}")


@dataclass(frozen=True)
class SimulationConfig:
    num_elements: int
    tau: float
    t_final: float
    domain: tuple = (0.0, 16.0)
    degree_k: int = 2
    order_q: int = 2
    params: ModelParams = ModelParams(0.0, 0.3)
    psi0: Profile = "zero"
    p0: Profile = "gaussian(0.2)"
    snapshot_times: tuple = ()
    integrator: str = "cpg"
    newton: NewtonConfig = NewtonConfig()

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError(f"empty domain {self.domain}")
        if self.num_elements < 1 or self.degree_k < 1 or self.order_q < 1:
            raise ValueError("num_elements, degree_k and order_q must be >= 1")
        if not (self.tau > 0 and self.t_final > 0):
            raise ValueError("tau and t_final must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}; choose from {INTEGRATORS}")
        ratio = self.t_final / self.tau
        if abs(ratio - round(ratio)) > 0.5 or round(ratio) < 1:
            raise ValueError("t_final must hold at least one step")

    @property
    def num_steps(self) -> int:
        return int(round(self.t_final / self.tau))

    def replace(self, **kw) -> "SimulationConfig":
        return dataclasses.replace(self, **kw)

    def mesh(self) -> Mesh1D:
        return build_uniform_mesh(self.domain[0], self.domain[1], self.num_elements, self.degree_k)


@dataclass
class Trajectory:
    config: SimulationConfig
    mesh: Mesh1D
    snapshots: list = field(default_factory=list)
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    newton_iterations: list = field(default_factory=list)
    status: str = "completed"
    message: str = ""
    # p at every ``history_stride``-th step, keyed by step time
    history_times: list = field(default_factory=list)
    history_p: list = field(default_factory=list)

    @property
    def snapshot_times(self) -> list:
        return [s.time for s in self.snapshots]

    @property
    def final_time(self) -> float:
        return self.ledger.times[-1]


def run_simulation(config: SimulationConfig, history_stride: int = 0) -> Trajectory:
    """Integrate from 0 to ``t_final``; integrator failures end the run with a status."""
    mesh = config.mesh()
    K = assemble_stiffness(mesh)
    w = assemble_lumped_weights(mesh)
    params, tau, N = config.params, config.tau, config.num_steps
    state = State(parse_profile(config.psi0, mesh), parse_profile(config.p0, mesh), 0.0)

    snap_steps = {min(max(int(round(t / tau)), 0), N) for t in config.snapshot_times}
    traj = Trajectory(config, mesh)
    traj.ledger.start(0.0, discrete_energy(mesh, K, w, params, state))

    def record(n, s):
        if n in snap_steps:
            traj.snapshots.append(s)
        if history_stride and n % history_stride == 0:
            traj.history_times.append(s.time)
            traj.history_p.append(s.p.copy())

    record(0, state)
    for n in range(1, N + 1):
        try:
            if config.integrator == "cpg":
                new, slab = step_cpg(state, tau, config.order_q, params, K, w, config.newton)
                its = slab.iterations
            else:
                new, its = one_step(config.integrator, state, tau, params, K, w, config.newton)
                slab = SlabSolution(state.time, tau, np.vstack([state.psi, new.psi]),
                                    np.vstack([state.p, new.p]), its)
        except DegeneracyError as exc:
            traj.status, traj.message = "degenerate", f"step {n}: {exc}"
            break
        except NewtonError as exc:
            traj.status, traj.message = "newton-failed", f"step {n}: {exc}"
            break
        state = State(new.psi, new.p, n * tau)
        traj.newton_iterations.append(its)
        traj.ledger.record(state.time, discrete_energy(mesh, K, w, params, state),
                           dissipation_increment(K, slab, params))
        record(n, state)
    return traj


def _match_indices(coarse, fine, scale, what):
    fine = np.asarray(fine)
    idx = np.clip(np.searchsorted(fine, coarse), 0, len(fine) - 1)
    lo = np.clip(idx - 1, 0, len(fine) - 1)
    idx = np.where(np.abs(fine[lo] - coarse) < np.abs(fine[idx] - coarse), lo, idx)
    if np.any(np.abs(fine[idx] - coarse) > 1e-10 * scale):
        raise ValueError(f"grids are not nested: some {what} have no coincident reference value")
    return idx


def error_at_gridpoints(trajectory: Trajectory, reference: Trajectory) -> float:
    """max over recorded steps of the lumped norm of p - p_ref at coincident nodes."""
    if not trajectory.history_times:
        raise ValueError("trajectory has no recorded p history")
    mesh = trajectory.mesh
    nodes = _match_indices(mesh.global_nodes, reference.mesh.global_nodes,
                           max(1.0, mesh.length), "nodes")
    times = _match_indices(np.asarray(trajectory.history_times), reference.history_times,
                           max(1.0, trajectory.final_time), "time levels")
    w = assemble_lumped_weights(mesh).weights
    err = 0.0
    for p, j in zip(trajectory.history_p, times):
        d = p - reference.history_p[j][nodes]
        err = max(err, math.sqrt(float(np.sum(w * d * d))))
    return err


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    err: float
    eoc: float | None = None


def _level_config(base: SimulationConfig, h: float) -> SimulationConfig:
    L = base.domain[1] - base.domain[0]
    n = int(round(L / h))
    if abs(n * h - L) > 1e-12 * L:
        raise ValueError(f"h = {h} does not divide the domain length {L}")
    return base.replace(num_elements=n, tau=h, integrator="cpg", snapshot_times=())


def reference_oracle(config: SimulationConfig, finest_h: float, history_stride: int = 4) -> Trajectory:
    """cPG run with h = tau = finest_h / 4 standing in for the exact solution."""
    return run_simulation(_level_config(config, finest_h / 4), history_stride=history_stride)


def convergence_study(base: SimulationConfig, levels: int, h0: float = 0.25,
                      reference: Trajectory | None = None) -> list[ConvergenceRow]:
    """Errors and eoc for h = tau = h0, h0/2, ... against the reference oracle."""
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    hs = [h0 / 2**l for l in range(levels)]
    if reference is None:
        reference = reference_oracle(base, hs[-1])
    if reference.status != "completed":
        raise RuntimeError(f"reference run failed: {reference.message}")
    rows = []
    for h in hs:
        traj = run_simulation(_level_config(base, h), history_stride=1)
        if traj.status != "completed":
            raise RuntimeError(f"level h={h} failed: {traj.message}")
        err = error_at_gridpoints(traj, reference)
        eoc = math.log2(rows[-1].err / err) if rows else None
        rows.append(ConvergenceRow(h, err, eoc))
    return rows


@dataclass(frozen=True)
class IntegratorSummary:
    integrator: str
    max_drift: float
    balance_residual: float
    final_energy: float
    status: str


def summarize(traj: Trajectory) -> IntegratorSummary:
    led = traj.ledger
    return IntegratorSummary(traj.config.integrator, float(led.drift().max()),
                             float(led.balance_residual().max()), float(led.energies[-1]),
                             traj.status)


def compare_integrators(config: SimulationConfig) -> list[IntegratorSummary]:
    """Run every integrator on identical data and report energy behaviour."""
    return [summarize(run_simulation(config.replace(integrator=name))) for name in INTEGRATORS]
