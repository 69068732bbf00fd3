"""Layer-wise gradient-descent learning of Gaussian multi-index models.

Library surface: targets and data generation, losses and preprocessing
values, the two-layer network, the layer-wise trainer and its joint Adam
experiment mode, spectral/power-iteration diagnostics, recovery metrics,
monomial-approximation machinery, and the sweep harness behind the CLI.
"""

from .targets import (HiddenSubspace, LinkFunction, MultiIndexTarget, Dataset,
                      hermite_poly, make_subspace, make_target, eval_target,
                      generate_dataset)
from .losses import LossFunction, PreprocValues, loss_value, loss_d1, preprocess
from .network import (Activation, ACTIVATIONS, NetworkParams, init_symmetric,
                      init_kaiming, forward, grad_W, grad_a, grad_b)
from .spectral import (SpectralReport, DeviationReport, empirical_sigma,
                       population_sigma, eigen_report, oracle_features,
                       deviation_report, noise_norm, alignment_to_subspace)
from .metrics import (RecoveryReport, cos_best, direction_coverage,
                      principal_angles, test_error, recovery_report)
from .approx import WeightFunction, build_weight_fn, monomial_error
from .trainer import (TrainPlan, TrainReport, AdamConfig, default_hyperparams,
                      assumption7_eps0, paper_exact_stage2, train_stage1,
                      reinit_second_stage, train_stage2, run_algorithm1,
                      train_adam)

__version__ = "0.1.0"
