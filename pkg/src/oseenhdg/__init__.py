"""Equal-order hybridized DG discretizations of the 2D Oseen problem
(hdg / e-hdg / edg trace variants) with pressure-jump stabilization, static
condensation, and a manufactured-solution convergence harness."""

from .analysis import ConvergenceRecord, ErrorReport, compute_rates, energy_norm, l2_error
from .forms import GlobalSystem, LocalBlocks, OseenConfig, assemble_global, default_eta
from .linsys import DiscreteSolution, condense_and_solve, solve_direct
from .mesh import MeshTopology, build_uniform_mesh, facet_normal_consistency
from .projection import lagrange_interpolate, project_element, project_facet
from .refspace import (
    QuadratureRule,
    ReferenceBasis,
    edge_rule,
    eval_basis,
    eval_edge_basis,
    reference_basis,
    triangle_rule,
)
from .spaces import (
    MethodVariant,
    SpaceLayout,
    build_layout,
    eval_field,
    eval_trace,
    system_prolongation,
    trace_prolongation,
)
from .study import (
    ManufacturedCase,
    StudyConfig,
    manufactured_case,
    run_alpha_sweep,
    run_convergence_study,
    run_eta_alpha_grid,
    solve_on_mesh,
)

__version__ = "0.1.0"
