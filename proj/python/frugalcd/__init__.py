"""Frugal active-learning change detection with invertible-network augmentation."""

from ._frugalcd import (
    Dataset,
    FrugalError,
    InvertibleNet,
    RngStream,
    auc_of_eers,
    binary_combine,
    compute_eer,
    fit,
    gaussian_vector,
    invert_matrix,
    load_dataset,
    orthonormality_residual,
    run_simulated,
    sampling_rate,
    save_dataset,
    spectral_norm,
    split_half,
    supervised_eer,
    synth_generate,
    unary_augment,
)

__all__ = [
    "Dataset",
    "FrugalError",
    "InvertibleNet",
    "RngStream",
    "auc_of_eers",
    "binary_combine",
    "compute_eer",
    "fit",
    "gaussian_vector",
    "invert_matrix",
    "load_dataset",
    "orthonormality_residual",
    "run_simulated",
    "sampling_rate",
    "save_dataset",
    "spectral_norm",
    "split_half",
    "supervised_eer",
    "synth_generate",
    "unary_augment",
]
