"""Local discontinuous Galerkin solver for the generalized Benjamin-Ono equation.

Solves u_t + f(u)_x - H u_xx = 0 on a truncated interval with a modal DG
discretization, a quadrature-assembled Hilbert transform, and Crank-Nicolson
or fourth-order Runge-Kutta time stepping.
"""

from .hilbert import HilbertOperator, apply_hilbert, assemble_hilbert
from .mesh import (
    DGSpace,
    FieldCoeffs,
    Mesh,
    build_mesh,
    eval_basis,
    eval_field,
    field_inner,
    field_norm,
)
from .operators import (
    BURGERS,
    LINEAR,
    BlowUpError,
    Flux,
    FluxConfig,
    OperatorSet,
    assemble_operators,
    lax_friedrichs,
    nonlinear_rhs,
)
from .projection import l2_project, radau_project
from .quadrature import QuadRule, gauss_legendre
from .solutions import (
    OneSolitonParams,
    TwoSolitonParams,
    conserved_quantities,
    convergence_rate,
    l2_error,
    one_soliton,
    two_soliton,
)
from .stability import (
    build_composite_matrices,
    check_semi_negative,
    energy_change,
    multistep_stability_trial,
    operator_norm,
    stability_report,
)
from .timestepping import (
    NewtonDivergedError,
    TimeConfig,
    cn_step,
    lserk54_step,
    newton_solve,
    rk4_step,
    run_simulation,
)

__version__ = "0.1.0"

from .harness import (  # noqa: E402  (depends on __version__)
    ConfigError,
    RunConfig,
    make_config,
    run_convergence_study,
    run_study_with_outputs,
)
