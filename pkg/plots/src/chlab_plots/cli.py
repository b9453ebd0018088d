"""Script entry point: chlab-plots <diagnostics.csv> <snapshot_dir> <out_dir>."""

from __future__ import annotations

import json
import sys

from .plot_run import plot_run
from .reader import SchemaMismatch


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 3:
        print("usage: chlab-plots <diagnostics.csv> <snapshot_dir> <out_dir>", file=sys.stderr)
        return 2
    csv_path, snapshot_dir, out_dir = args
    try:
        written = plot_run(csv_path, snapshot_dir, out_dir)
    except SchemaMismatch as e:
        print(json.dumps({"error": "SchemaMismatch", "detail": str(e)}), file=sys.stderr)
        return 1
    except OSError as e:
        print(json.dumps({"error": "IOError", "detail": str(e)}), file=sys.stderr)
        return 1
    for path in sorted(written):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
