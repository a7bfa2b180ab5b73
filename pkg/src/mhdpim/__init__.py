"""Finite element solver for incompressible MHD in Elsasser variables.

The main scheme is a partitioned implicit midpoint method (PIM): each step
is a backward Euler half step, solved by decoupled Picard sweeps over the
two Elsasser fields, followed by linear extrapolation. A constant-step
IMEX BDF2-AB2 scheme is included for comparison, together with an
adaptive step controller and the manufactured test problems.
"""

from .adapt import (ControllerConfig, LTEEstimate, StepHistory, ab2_predict, adaptive_loop,
                    compute_R, control_step, estimate_lte)
from .baseline import Bdf2State, Bdf2Stepper, bdf2ab2_step
from .diagnostics import (DiagnosticsTracker, convergence_rates, cross_helicity,
                          dissipation_increment, energy, error_norms)
from .errors import (AdaptivityFailure, EstimatorSingular, EvaluationFailure,
                     InsufficientHistory, InvalidArgument, LinearSolveFailure, MHDError,
                     NonconvergenceError)
from .forms import PhysicalParams
from .mesh import Mesh, build_rect_mesh
from .problems import (HartmannParams, ProblemSpec, decaying_vortices, hartmann,
                       lindberg_hartmann, travelling_wave)
from .spaces import SpacePair, build_spaces
from .stepper import (Discretization, ElsasserState, PIMStepper, pim_step,
                      theoretical_rate, theoretical_tau_bound)

__version__ = "0.1.0"
