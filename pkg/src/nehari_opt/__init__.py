"""Ground states of semilinear elliptic PDEs via descent on the Nehari manifold.

The library computes the least-energy sign-definite solutions of

    -lap u + a(x) u = g(x) |u|^(p-1) u,   u = 0 on the boundary,

which are saddle points of the energy in the full space but minimizers on the
Nehari constraint set, by Riemannian descent with an explicit retraction, a
nonmonotone line search and Barzilai-Borwein trial steps.  An analysis layer
verifies the saddle structure (Morse index one) and reproduces the
symmetry-breaking study of the Henon equation on the interval and the disk.
"""

from .analysis import (
    ASYMMETRY_THRESHOLD,
    AsymmetryReport,
    CriticalExponentResult,
    FitResult,
    MorseReport,
    asymmetry,
    asymmetry_1d,
    asymmetry_2d_disk,
    bisect_critical_l,
    expected_bisection_evals,
    fit_exp_law,
    fit_inverse_law,
    morse_index_check,
    scaling_symmetry_check,
)
from .discretization import IntervalMesh, SquareMesh
from .diskgrid import DiskMesh
from .errors import (
    AssemblyFailure,
    ConfigError,
    DegenerateConstraintGradient,
    DegenerateDirection,
    EigenSolveFailure,
    InsufficientData,
    InvalidBracket,
    InvalidCoefficient,
    LinearSolveFailure,
    LineSearchFailure,
    NonPositiveData,
    SolverError,
    ZeroField,
)
from .fields import DiscreteField, ManifoldPoint, TangentVector
from .manifold import (
    manifold_point,
    nehari_residual,
    nehari_scale,
    project_tangent,
    retract,
    riemannian_gradient,
)
from .optimizer import (
    NonmonotoneState,
    RunRecord,
    SolverConfig,
    backtracking_search,
    bb_trial_step,
    diagnostics_gradient_related,
    nehari_descent,
    update_nonmonotone,
    verify_run_chain,
)
from .problem import (
    Coefficient,
    EllipticProblem,
    FIRST_DIRICHLET_EIGENVALUE,
    GradientPair,
    apply_derivative,
    apply_hessian,
    energy,
    h_gradients,
    make_mesh,
    preset_henon,
    preset_nls,
)

__version__ = "0.1.0"
