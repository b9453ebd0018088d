"""External file formats: field snapshots, checkpoints, steady states, CSV.

Field block: one ASCII header line

    CHFIELD v1 dim=<d> n=<n,...> length=<L,...> [TAG] [key=value ...]

followed by raw little-endian float64 nodal values in row-major order.
Multi-field files are concatenated blocks.  Checkpoints prepend an ASCII
section (CHCKPT v1, t, step, full config echo, ENDHDR) to the u and v
blocks; steady-state files carry a STEADY tag and the two multipliers.

The diagnostics CSV starts with '#'-prefixed config-echo lines, then the
fixed column header, then one row per record with shortest-round-trip
float formatting.
"""

from __future__ import annotations

import numpy as np

from .diagnostics import CSV_HEADER, DiagnosticsRecord
from .solver import State
from .spectral_core import Grid, ScalarField


def _fmt(x) -> str:
    return repr(float(x))


def write_field_block(fp, field: ScalarField, tags=(), annotations=None):
    g = field.grid
    parts = [
        "CHFIELD v1",
        f"dim={g.dim}",
        "n=" + ",".join(str(m) for m in g.n),
        "length=" + ",".join(_fmt(l) for l in g.length),
    ]
    parts.extend(tags)
    for k, v in (annotations or {}).items():
        parts.append(f"{k}={v}")
    fp.write((" ".join(parts) + "\n").encode("ascii"))
    fp.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field_block(fp):
    """Return (ScalarField, tags, annotations); None at end of file."""
    line = fp.readline()
    if not line:
        return None
    header = line.decode("ascii").strip()
    tokens = header.split()
    if tokens[:2] != ["CHFIELD", "v1"]:
        raise ValueError(f"not a CHFIELD v1 header: {header!r}")
    kv = {}
    tags = []
    for tok in tokens[2:]:
        if "=" in tok:
            k, v = tok.split("=", 1)
            kv[k] = v
        else:
            tags.append(tok)
    for req in ("dim", "n", "length"):
        if req not in kv:
            raise ValueError(f"CHFIELD header missing {req}: {header!r}")
    n = tuple(int(x) for x in kv["n"].split(","))
    length = tuple(float(x) for x in kv["length"].split(","))
    if len(n) != int(kv["dim"]) or len(length) != int(kv["dim"]):
        raise ValueError(f"inconsistent CHFIELD header: {header!r}")
    grid = Grid(n, length)
    count = int(np.prod(n))
    raw = fp.read(count * 8)
    if len(raw) != count * 8:
        raise ValueError("truncated CHFIELD payload")
    values = np.frombuffer(raw, dtype="<f8").reshape(n)
    extra = {k: v for k, v in kv.items() if k not in ("dim", "n", "length")}
    return ScalarField(grid, values), tags, extra


def write_snapshot(path, state: State):
    with open(path, "wb") as fp:
        write_field_block(fp, state.u, annotations={"name": "u", "t": _fmt(state.t)})
        write_field_block(fp, state.v, annotations={"name": "v", "t": _fmt(state.t)})


def read_snapshot(path) -> State:
    with open(path, "rb") as fp:
        u, _, au = read_field_block(fp)
        v, _, av = read_field_block(fp)
    t = float(au.get("t", av.get("t", "0.0")))
    return State(t, u, v)


def write_steady(path, state: State, multipliers):
    mu_m, phi_m = multipliers
    ann = {"mult_u": _fmt(mu_m), "mult_v": _fmt(phi_m), "t": _fmt(state.t)}
    with open(path, "wb") as fp:
        write_field_block(fp, state.u, tags=("STEADY",), annotations={"name": "u", **ann})
        write_field_block(fp, state.v, tags=("STEADY",), annotations={"name": "v", **ann})


def read_steady(path):
    with open(path, "rb") as fp:
        u, tags_u, au = read_field_block(fp)
        v, tags_v, _ = read_field_block(fp)
    if "STEADY" not in tags_u or "STEADY" not in tags_v:
        raise ValueError(f"{path} is not a steady-state file")
    mult = (float(au["mult_u"]), float(au["mult_v"]))
    return State(float(au.get("t", "0.0")), u, v), mult


def write_checkpoint(path, state: State, step: int, config_echo: dict):
    with open(path, "wb") as fp:
        lines = ["CHCKPT v1", f"t = {_fmt(state.t)}", f"step = {step}"]
        lines += [f"{k} = {v}" for k, v in config_echo.items()]
        lines.append("ENDHDR")
        fp.write(("\n".join(lines) + "\n").encode("ascii"))
        write_field_block(fp, state.u, annotations={"name": "u"})
        write_field_block(fp, state.v, annotations={"name": "v"})


def read_checkpoint(path):
    """Return (State, step, config_echo dict)."""
    with open(path, "rb") as fp:
        first = fp.readline().decode("ascii").strip()
        if first != "CHCKPT v1":
            raise ValueError(f"not a CHCKPT v1 file: {first!r}")
        t = None
        step = None
        echo = {}
        while True:
            line = fp.readline()
            if not line:
                raise ValueError("checkpoint header not terminated by ENDHDR")
            text = line.decode("ascii").strip()
            if text == "ENDHDR":
                break
            if "=" not in text:
                raise ValueError(f"malformed checkpoint header line: {text!r}")
            k, v = (s.strip() for s in text.split("=", 1))
            if k == "t":
                t = float(v)
            elif k == "step":
                step = int(v)
            else:
                echo[k] = v
        u, _, _ = read_field_block(fp)
        v, _, _ = read_field_block(fp)
    if t is None or step is None:
        raise ValueError("checkpoint header missing t or step")
    return State(t, u, v), step, echo


class DiagnosticsWriter:
    """Streaming CSV writer with the config echo in '#' comment lines."""

    def __init__(self, path, config_echo: dict | None = None):
        self._fp = open(path, "w", encoding="ascii")
        if config_echo:
            for k, v in config_echo.items():
                self._fp.write(f"# {k} = {v}\n")
        self._fp.write(CSV_HEADER + "\n")
        self._fp.flush()

    def write(self, rec: DiagnosticsRecord):
        self._fp.write(rec.csv_row() + "\n")
        self._fp.flush()

    def close(self):
        self._fp.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics_csv(path):
    """Return (config_echo dict, list of DiagnosticsRecord)."""
    echo = {}
    records = []
    with open(path, encoding="ascii") as fp:
        header = None
        for line in fp:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = (s.strip() for s in body.split("=", 1))
                    echo[k] = v
                continue
            if header is None:
                if line != CSV_HEADER:
                    raise ValueError(f"unexpected CSV header: {line!r}")
                header = line
                continue
            if not line:
                continue
            cells = line.split(",")
            records.append(
                DiagnosticsRecord(
                    t=float(cells[0]),
                    step=int(cells[1]),
                    mass_u=float(cells[2]),
                    mass_v=float(cells[3]),
                    psi=float(cells[4]),
                    psi_hat=float(cells[5]),
                    psi_tilde=float(cells[6]),
                    grad_mu_sq=float(cells[7]),
                    grad_phitilde_sq=float(cells[8]),
                    oono_source=float(cells[9]),
                    min_u=float(cells[10]),
                    max_u=float(cells[11]),
                    min_v=float(cells[12]),
                    max_v=float(cells[13]),
                    newton_iters=int(cells[14]),
                    energy_residual=float(cells[15]) if cells[15] else None,
                    steady_res_u=float(cells[16]),
                    steady_res_v=float(cells[17]),
                )
            )
    if header is None:
        raise ValueError(f"{path} has no CSV header")
    return echo, records
