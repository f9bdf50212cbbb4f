import numpy as np
import pytest

from westervelt_cpg import (
    ModelParams,
    State,
    assemble_lumped_weights,
    assemble_stiffness,
    build_uniform_mesh,
    interpolate,
)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class Problem:
    """Mesh plus assembled operators."""

    def __init__(self, a, b, ne, k):
        self.mesh = build_uniform_mesh(a, b, ne, k)
        self.K = assemble_stiffness(self.mesh)
        self.w = assemble_lumped_weights(self.mesh)

    @property
    def x(self):
        return self.mesh.global_nodes

    def gaussian_state(self, c=0.2, x0=0.0, amp=1.0):
        p = interpolate(self.mesh, lambda x: amp * np.exp(-c * (x - x0) ** 2))
        return State(np.zeros_like(p), p, 0.0)

    def random_state(self, rng, amp=0.5):
        n = self.mesh.num_nodes
        return State(rng.uniform(-amp, amp, n), rng.uniform(-amp, amp, n), 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20181)


@pytest.fixture(scope="session")
def paper_problem():
    return Problem(0.0, 16.0, 256, 2)


@pytest.fixture
def nonlinear():
    return ModelParams(alpha=0.0, beta=0.3)


def paper_config(**kw):
    from westervelt_cpg import SimulationConfig

    base = dict(num_elements=256, tau=0.0625, t_final=8.0, domain=(0.0, 16.0), degree_k=2,
                order_q=2, params=ModelParams(0.0, 0.3), psi0="zero", p0="gaussian(0.2)",
                snapshot_times=(1.0, 4.0, 8.0))
    base.update(kw)
    return SimulationConfig(**base)


@pytest.fixture(scope="session")
def paper_runs():
    """Fig. 1 setup (h = tau = 0.0625, T = 8) with every integrator."""
    from westervelt_cpg import run_simulation
    from westervelt_cpg.experiments import INTEGRATORS

    return {name: run_simulation(paper_config(integrator=name)) for name in INTEGRATORS}


@pytest.fixture(scope="session")
def paper_linear_run():
    from westervelt_cpg import run_simulation

    return run_simulation(paper_config(params=ModelParams(0.0, 0.0)))
