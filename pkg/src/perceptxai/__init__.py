"""Cue-controlled image datasets, perceptibility filtering and explanation metrics."""
__version__ = "0.1.0"

from .classify import LogisticGD, Model, evaluate, measure_cue_reliance, predict, train
from .explain import contribution_heatmap, occlusion_heatmap
from .features import FeatureExtractor, FeatureSpec, extract_features
from .filters import BilateralFilter, FilterParams, apply_filter, attenuation_report
from .image import Heatmap, load_image, save_image, synth_base, to_grayscale
from .metrics import auc_iou, perturb_random, perturb_topk, perturbation_curve, spectral_shift_report
from .spectrum import SpectrumProfile, azimuthal_average, band_energy, class_separation, dft2_amplitude
from .synth import CueSpec, DatasetConfig, DatasetManifest, apply_hf_stripes, apply_white_square, build_dataset

__all__ = [
    "BilateralFilter",
    "CueSpec",
    "DatasetConfig",
    "DatasetManifest",
    "FeatureExtractor",
    "FeatureSpec",
    "FilterParams",
    "Heatmap",
    "LogisticGD",
    "Model",
    "apply_filter",
    "apply_hf_stripes",
    "apply_white_square",
    "attenuation_report",
    "auc_iou",
    "azimuthal_average",
    "band_energy",
    "build_dataset",
    "class_separation",
    "contribution_heatmap",
    "dft2_amplitude",
    "evaluate",
    "extract_features",
    "load_image",
    "measure_cue_reliance",
    "occlusion_heatmap",
    "perturb_random",
    "perturb_topk",
    "perturbation_curve",
    "predict",
    "save_image",
    "spectral_shift_report",
    "synth_base",
    "to_grayscale",
    "train",
]
