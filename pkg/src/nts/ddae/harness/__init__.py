"""
Run orchestration, dataset ingestion and result output.

Classes:
    - DDAERun: Phases of one configured run.
    - Variant: Named configuration overrides of an ablation.
    - ExperimentRecord, RecordSink: Experiment records (re-exported from utilities).

Functions:
    - load_cifar10_binary, load_png_directory, load_dataset, resolve_data_path
    - run_ablation, levels_variant, beta_range_variant, standard_variants
    - emit_csv, emit_plot, select_records, read_records
    - main: Command line entry point.
"""

from .datasets import load_cifar10_binary, load_dataset, load_png_directory, resolve_data_path
from .emit import emit_csv, emit_plot, select_records
from .pipeline import DDAERun
from .ablation import Variant, beta_range_variant, levels_variant, run_ablation, standard_variants
from .cli import main
from ..utilities.records import ExperimentRecord, RecordSink, read_records

__all__ = [
    "load_cifar10_binary",
    "load_dataset",
    "load_png_directory",
    "resolve_data_path",
    "emit_csv",
    "emit_plot",
    "select_records",
    "DDAERun",
    "Variant",
    "beta_range_variant",
    "levels_variant",
    "run_ablation",
    "standard_variants",
    "main",
    "ExperimentRecord",
    "RecordSink",
    "read_records",
]
