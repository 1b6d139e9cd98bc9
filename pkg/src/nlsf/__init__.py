"""Nonlinear spectral filters: transferable spectral-domain learning on graphs."""

__version__ = "0.1.0"

from .graph import (
    GraphSignal,
    GsoKind,
    SparseSymMatrix,
    add_degree_features,
    build_laplacian,
    channel_norms,
    spmv,
)
from .eig import (
    EigConfig,
    SpectralBasis,
    dense_eig,
    estimate_lambda_max,
    group_eigenspaces,
    lanczos_smallest,
    project_complement,
    project_group,
)
from .filterbank import FilterBank, band_project, dyadic_bands, uniform_bands
from .spectral import (
    BlockProjections,
    SpectralCoefficients,
    StabilityParams,
    analyze_index,
    analyze_value,
    dist_spectral,
    synthesize_diag,
    synthesize_index,
    synthesize_value,
    synthesis_singular_values,
)

__all__ = [
    "GraphSignal", "GsoKind", "SparseSymMatrix", "add_degree_features",
    "build_laplacian", "channel_norms", "spmv",
    "EigConfig", "SpectralBasis", "dense_eig", "estimate_lambda_max",
    "group_eigenspaces", "lanczos_smallest", "project_complement", "project_group",
    "FilterBank", "band_project", "dyadic_bands", "uniform_bands",
    "BlockProjections", "SpectralCoefficients", "StabilityParams",
    "analyze_index", "analyze_value", "dist_spectral",
    "synthesize_diag", "synthesize_index", "synthesize_value",
    "synthesis_singular_values",
]
