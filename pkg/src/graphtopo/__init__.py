"""Network topology identification from nodal signals.

Undirected estimators (correlation networks with FDR control, graphical
lasso, Laplacian-constrained GMRFs, smooth-signal graph learning), directed
ones (sparse SEM, VAR, continuous DAG learning, kernel-based nonlinear
SVARM), dynamic variants, anchored joint diagonalization and joint
inference of signals and topology from partial observations.
"""
from .core import (DegreeOperator, EdgeVector, Graph, RecoveryReport, SignalMatrix,
                   generate_sem_signals, generate_smooth_signals, generate_synthetic, has_cycle,
                   laplacian, score_recovery)
from .corrnet import (bh_fdr_select, correlation_network, fisher_tests, partial_correlations,
                      pearson_matrix, sample_covariance)
from .dynjd import (GraphSequence, JdProblem, dynamic_sem_track, jd_fit, segment_correlations,
                    tv_graphical_lasso, tv_smooth_learn)
from .errors import (AmbiguityError, AnchorError, DegenerateInput, DomainError, EmptyInput,
                     EmptySlot, GraphTopoError, InputFormatError, KernelError, ParamError,
                     ShapeError, ZeroSignal)
from .gmrf import default_lambda, graphical_lasso, laplacian_gmrf
from .jisg import PartialObservations, cnmse, jisg_fit, sample_observations
from .ksvarm import KernelSpec, build_kernel_stack, ksvarm_fit, mkl_fit
from .semdag import acyclicity, dag_fit, sem_fit, simulate_sem, simulate_var, varm_fit
from .smoothlearn import (DistanceVector, distance_vector, gft_classify, learn_class_graphs,
                          learn_graph)

__version__ = "0.1.0"
