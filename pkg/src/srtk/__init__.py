"""Segmentation refinement toolkit.

Library and CLI for the non-neural parts of a prompt-driven
segmentation adaptation workflow: canonical prompt handling, controlled
prompt corruption, histogram equalization, connected-component
plausibility refinement under per-class Beta priors, adaptation-set
manifests, and DICE/ASD/KS evaluation.
"""

from .core import (
    AdaptManifest,
    GridImage,
    LabelMask,
    ProbabilityMap,
    duplicate_channels,
    normalize_intensity,
    validate_pair,
)
from .components import Component, ComponentSet, compute_features, extract_components
from .chaos import (
    ChaosConfig,
    RateSchedule,
    SplitMix64,
    chaos_score,
    generate_chaos,
    levenshtein,
    perturb_once,
    rate_schedule,
)
from .imgproc import Histogram, histogram_equalize, intensity_samples
from .metrics import aggregate, asd, dice, evaluate_case, ks_statistic
from .plausibility import (
    BetaParams,
    ClassPrior,
    PriorsTable,
    RefinementReport,
    beta_log_pdf,
    load_priors,
    plausibility_log_score,
    refine_mask,
    retention_threshold,
)
from .prompts import (
    CanonicalPrompt,
    Lexicon,
    MetaPromptConfig,
    RawPromptBatch,
    canonicalize_lexicon,
    canonicalize_llm,
    emit_canonical,
    parse_canonical,
    split_batch,
)
from .tensor_io import read_pnm, read_tensor, write_pnm, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AdaptManifest",
    "BetaParams",
    "CanonicalPrompt",
    "ChaosConfig",
    "ClassPrior",
    "Component",
    "ComponentSet",
    "GridImage",
    "Histogram",
    "LabelMask",
    "Lexicon",
    "MetaPromptConfig",
    "PriorsTable",
    "ProbabilityMap",
    "RateSchedule",
    "RawPromptBatch",
    "RefinementReport",
    "SplitMix64",
    "aggregate",
    "asd",
    "beta_log_pdf",
    "canonicalize_lexicon",
    "canonicalize_llm",
    "chaos_score",
    "compute_features",
    "dice",
    "duplicate_channels",
    "emit_canonical",
    "evaluate_case",
    "extract_components",
    "generate_chaos",
    "histogram_equalize",
    "intensity_samples",
    "ks_statistic",
    "levenshtein",
    "load_priors",
    "normalize_intensity",
    "parse_canonical",
    "perturb_once",
    "plausibility_log_score",
    "rate_schedule",
    "read_pnm",
    "read_tensor",
    "refine_mask",
    "retention_threshold",
    "split_batch",
    "validate_pair",
    "write_pnm",
    "write_tensor",
    "__version__",
]
