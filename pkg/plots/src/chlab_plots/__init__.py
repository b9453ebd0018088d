"""chlab-plots: figures from chlab diagnostics CSVs and field snapshots."""

from .plot_run import plot_run
from .reader import RunTable, SchemaMismatch, read_run_csv, read_snapshot

__all__ = ["RunTable", "SchemaMismatch", "plot_run", "read_run_csv", "read_snapshot"]

__version__ = "0.1.0"
