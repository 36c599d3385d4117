"""Spectral graph perturbation and minimax-trained graph convolutional nets."""

from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    SolverError,
    TrainingError,
)
from .gcnnet import (
    GcnModel,
    Propagation,
    TrainConfig,
    TrainResult,
    evaluate,
    train,
)
from .graphstore import (
    Dataset,
    Split,
    load_canonical_split,
    load_dataset,
    planetoid_ratio_split,
    save_dataset,
    synthetic_graph,
)
from .perturb import (
    PerturbationParams,
    apply_perturbed_propagation,
    draw_noise,
    perturbation_vector,
    perturbed_density_dense,
    spectrum_delta,
)
from .proximity import highorder_preprocess
from .sparsela import (
    SparseSym,
    density_of,
    laplacian_of,
    renormalize_adjacency,
    sparsity,
    spmm,
)
from .spectral import (
    SpectralBasis,
    bures_distance,
    bures_trace_diagnostics,
    lowrank_project,
    topk_eigs,
    von_neumann_entropy,
)

__version__ = "0.1.0"
