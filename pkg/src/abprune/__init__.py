"""abprune: one-shot backward pruning of dense networks with lq soft-sparsity diagnostics."""

from .data import (
    Dataset,
    ScalerParams,
    apply_scaler,
    invert_scaler,
    load_csv,
    save_csv,
    split,
    standardize,
    synth_friedman,
    synth_regression,
)
from .network import (
    ActivationKind,
    ActivationTrace,
    LayerWeights,
    Network,
    activation,
    count_params,
    forward,
    forward_trace,
    load_weights,
    predict,
    save_weights,
)
from .sparsity import (
    SparsityProfile,
    achieved_tail_ratio,
    compression_ratio,
    keep_count,
    keep_count_bound,
    l0_norm,
    lq_norm,
    pruning_ratio,
    sparsity_index,
    sparsity_profile,
    top_m_indices,
)
from .solvers import FitResult, LassoConfig, kkt_violation, lasso_cd, ols_min_norm
from .training import (
    TrainConfig,
    TrainingDivergedError,
    backprop_gradients,
    grad_check,
    init_network,
    mse,
    train,
)
from .pruning import (
    AbpL,
    AbpM,
    BaselineMag,
    NeuronPruneRecord,
    PruneReport,
    approx_neuron_lasso,
    approx_neuron_magnitude,
    build_workspace,
    evaluate_pruned,
    prune_abp,
    prune_baseline,
)
from .bounds import (
    BoundInput,
    LayerStats,
    approximation_error_bound,
    bound_report,
    classification_error_bound,
    homogeneous_error_bound,
    layer_stats,
    magnitude_error_bound,
)
from .experiment import ExperimentConfig, ExperimentResult, run_experiment

__version__ = "0.1.0"
