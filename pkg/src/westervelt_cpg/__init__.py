"""Energy-preserving space-time finite elements for the 1D Westervelt equation."""

__version__ = "0.1.0"

from .assembly import LumpedInner, apply_D, assemble_lumped_weights, assemble_stiffness, inner_h
from .errors import DegeneracyError, NewtonError, WesterveltError
from .experiments import (
    ConvergenceRow,
    SimulationConfig,
    Trajectory,
    compare_integrators,
    convergence_study,
    error_at_gridpoints,
    reference_oracle,
    run_simulation,
)
from .integrators import (
    NewtonConfig,
    SlabSolution,
    baseline_implicit_midpoint,
    baseline_lobatto_iiia2,
    cpg_jacobian,
    cpg_residual,
    newton_solve,
    step_cpg,
    step_q1,
)
from .mesh import Mesh1D, build_uniform_mesh, evaluate_field, interpolate
from .model import (
    EnergyLedger,
    ModelParams,
    State,
    degeneracy_margin,
    discrete_energy,
    dissipation_increment,
)
