"""Product knowledge-editing toolkit.

Builds judge-supervised edit benchmarks from product catalogs and applies
weight-level editing methods (FT, LoRA, ROME, MEMIT) to a small transformer,
with a reliability/locality/portability evaluation harness.
"""

from .catalog import Category, ProductRecord, load_catalog, sample_products
from .backends import BackendConfig, GenRequest, GenResponse, complete, plausibility
from .benchmark import EditSample, compute_stats, read_benchmark, write_benchmark
from .editing import (
    CovStats,
    EditConfig,
    EditRequest,
    WeightDelta,
    apply_delta,
    ft_update,
    lora_update,
    memit_update,
    revert_delta,
    rome_update,
)
from .evaluation import EditOutcome, aggregate, run_experiment, target_token_accuracy
from .model import ModelConfig, TinyTransformer

__all__ = [
    "BackendConfig",
    "Category",
    "CovStats",
    "EditConfig",
    "EditOutcome",
    "EditRequest",
    "EditSample",
    "GenRequest",
    "GenResponse",
    "ModelConfig",
    "ProductRecord",
    "TinyTransformer",
    "WeightDelta",
    "aggregate",
    "apply_delta",
    "complete",
    "compute_stats",
    "ft_update",
    "load_catalog",
    "lora_update",
    "memit_update",
    "plausibility",
    "read_benchmark",
    "revert_delta",
    "rome_update",
    "run_experiment",
    "sample_products",
    "target_token_accuracy",
    "write_benchmark",
]

__version__ = "0.1.0"
