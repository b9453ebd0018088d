"""Parsers for the simulator's documented output formats.

Implemented against the file contracts only (diagnostics CSV with a
'#'-commented config echo, CHFIELD v1 snapshot blocks, the ls_probe
table); the simulator package itself is never imported, so either side
can be swapped out independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CSV_HEADER = (
    "t,step,mass_u,mass_v,psi,psi_hat,psi_tilde,grad_mu_sq,grad_phitilde_sq,"
    "oono_source,min_u,max_u,min_v,max_v,newton_iters,energy_residual,"
    "steady_res_u,steady_res_v"
)
COLUMNS = CSV_HEADER.split(",")
_INT_COLUMNS = {"step", "newton_iters"}


class SchemaMismatch(ValueError):
    """Input file does not follow the documented contract."""


@dataclass
class RunTable:
    """Column-functional view of one diagnostics CSV."""

    echo: dict
    columns: dict  # name -> list (floats, ints, or None for blank cells)

    def __len__(self):
        return len(self.columns["t"])

    def array(self, name):
        vals = self.columns[name]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def param(self, key, default=None):
        if key not in self.echo:
            return default
        return float(self.echo[key])


def read_run_csv(path) -> RunTable:
    echo = {}
    cols = {name: [] for name in COLUMNS}
    header_seen = False
    with open(path, encoding="ascii") as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = (s.strip() for s in body.split("=", 1))
                    echo[k] = v
                continue
            if not header_seen:
                if line != CSV_HEADER:
                    got = line.split(",")
                    offending = next(
                        (f"column {i}: {a!r} != {b!r}"
                         for i, (a, b) in enumerate(zip(got, COLUMNS)) if a != b),
                        f"{len(got)} columns != {len(COLUMNS)}",
                    )
                    raise SchemaMismatch(f"{path}:{lineno}: bad CSV header ({offending})")
                header_seen = True
                continue
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(COLUMNS):
                raise SchemaMismatch(f"{path}:{lineno}: row has {len(cells)} cells")
            for name, cell in zip(COLUMNS, cells):
                if cell == "":
                    cols[name].append(None)
                elif name in _INT_COLUMNS:
                    cols[name].append(int(cell))
                else:
                    cols[name].append(float(cell))
    if not header_seen:
        raise SchemaMismatch(f"{path}: missing CSV header")
    return RunTable(echo=echo, columns=cols)


@dataclass
class FieldBlock:
    dim: int
    n: tuple
    length: tuple
    values: np.ndarray
    tags: tuple
    annotations: dict


def _read_block(fp, path):
    line = fp.readline()
    if not line:
        return None
    header = line.decode("ascii").strip()
    tokens = header.split()
    if tokens[:2] != ["CHFIELD", "v1"]:
        raise SchemaMismatch(f"{path}: not a CHFIELD v1 header: {header!r}")
    kv, tags = {}, []
    for tok in tokens[2:]:
        if "=" in tok:
            k, v = tok.split("=", 1)
            kv[k] = v
        else:
            tags.append(tok)
    try:
        dim = int(kv["dim"])
        n = tuple(int(x) for x in kv["n"].split(","))
        length = tuple(float(x) for x in kv["length"].split(","))
    except KeyError as e:
        raise SchemaMismatch(f"{path}: header missing {e}") from None
    count = int(np.prod(n))
    raw = fp.read(count * 8)
    if len(raw) != count * 8:
        raise SchemaMismatch(f"{path}: truncated payload")
    values = np.frombuffer(raw, dtype="<f8").reshape(n)
    extra = {k: v for k, v in kv.items() if k not in ("dim", "n", "length")}
    return FieldBlock(dim, n, length, values, tuple(tags), extra)


def read_snapshot(path):
    """Return (t, u_block, v_block) for a two-field snapshot file."""
    with open(path, "rb") as fp:
        blocks = []
        while True:
            b = _read_block(fp, path)
            if b is None:
                break
            blocks.append(b)
    if len(blocks) != 2:
        raise SchemaMismatch(f"{path}: expected two field blocks, found {len(blocks)}")
    t = float(blocks[0].annotations.get("t", blocks[1].annotations.get("t", "0.0")))
    return t, blocks[0], blocks[1]


def read_ls_probe_csv(path):
    """Return (consistency dict, rows) from an ls_probe table."""
    consistent = {}
    rows = []
    with open(path, encoding="ascii") as fp:
        header_seen = False
        for line in fp:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("consistent"):
                    _, flags = body.split("=", 1)
                    for item in flags.strip().split(","):
                        th, yn = item.split(":")
                        consistent[float(th)] = yn.strip() == "yes"
                continue
            if not header_seen:
                if line != "t,theta,lhs,rhs,ratio":
                    raise SchemaMismatch(f"{path}: bad ls_probe header: {line!r}")
                header_seen = True
                continue
            if not line:
                continue
            t, theta, lhs, rhs, ratio = line.split(",")
            rows.append(
                (float(t), float(theta), float(lhs), float(rhs),
                 float(ratio) if ratio else None)
            )
    return consistent, rows
