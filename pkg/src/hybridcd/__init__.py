"""Hybrid Jacobi coordinate descent for two-layer ReLU regression networks."""

from .kernels import BACKEND
from .model import (
    Dataset,
    NetworkParams,
    forward,
    generate_dataset,
    gradient,
    init_params,
    load_dataset,
    loss,
    save_dataset,
)
from .coord_eval import PreactivationCache, build_cache, perturbed_loss
from .optimizers import (
    CoordinateTarget,
    DivergedError,
    EpochStats,
    GdConfig,
    HybridConfig,
    Rule,
    coordinate_target,
    gd_epoch,
    hybrid_epoch,
    line_search,
)
from .harness import (
    EpochMetrics,
    ExperimentConfig,
    compare_suite,
    emit_csv,
    emit_plot,
    read_csv,
    run_experiment,
    sweep_dw,
)

__version__ = "0.1.0"
