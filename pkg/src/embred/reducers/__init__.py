"""Pre-trained dimension reduction: five methods behind one model type."""

from .base import (
    FaParams,
    FitMeta,
    NlaeParams,
    NmfParams,
    PcaParams,
    PcaPpaParams,
    PpaParams,
    ReducerModel,
    transform,
)
from .fa import fit_fa
from .io import load_reducer, save_reducer
from .nlae import fit_nlae, hidden_width
from .nmf import fit_nmf
from .pca import fit_pca, fit_pca_ppa, fit_ppa_stage

__all__ = [
    "FaParams",
    "FitMeta",
    "NlaeParams",
    "NmfParams",
    "PcaParams",
    "PcaPpaParams",
    "PpaParams",
    "ReducerModel",
    "fit_fa",
    "fit_nlae",
    "fit_nmf",
    "fit_pca",
    "fit_pca_ppa",
    "fit_ppa_stage",
    "hidden_width",
    "load_reducer",
    "save_reducer",
    "transform",
]
