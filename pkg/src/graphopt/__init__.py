"""graphopt: distributed stochastic optimization dynamics over graphons.

Simulates finite-grid particle approximations of graphon-coupled SDE
systems, checks consensus and convergence behavior against explicit
bounds, and stress-tests the differential-inequality lemmas that back
the theory.
"""

from . import report
from .config import build_config, default_sgd_doc, default_tracking_doc
from .costs import CostConstants, QuadraticField, RegularizedSmooth
from .dynamics import (DriftFn, Ensemble, GeneralSystemSpec, InitSpec,
                       NoiseSpec, OUParams, SimConfig, SimResult,
                       init_ensemble, mean_ode_oracle, run, run_sgd,
                       run_tracking, run_tracking_direct)
from .errors import (BlowUpError, DomainError, GraphoptError, ModeError,
                     NumericsError, ReplicaError)
from .gains import (PowerLawGain, SgdGains, TrackingGains, ValidationResult,
                    validate_general, validate_sgd, validate_tracking)
from .graphon import (BlockModelKernel, ConstantKernel, CustomKernel,
                      DiscretizedGraphon, GraphonKernel, MinKernel,
                      ProductKernel, algebraic_connectivity, discretize,
                      is_connected, laplacian_matrix, midpoint_grid)
from .lemma_lab import (CoefficientPath, check_coupled_inequality,
                        check_scalar_inequality, envelope8,
                        integrate_scalar_equality)
from .metrics import (MetricSeries, Snapshot, bound12, build_series,
                      clt_band, consensus_l2, consensus_linf,
                      minimizer_errors, second_moment_int, tracking_error,
                      variance_sup)
from .profiles import Profile, VectorProfile

__version__ = "0.1.0"
