import io

import numpy as np
import pytest

from chlab import Grid, Parameters, ScalarField, State
from chlab import fieldio
from chlab.diagnostics import CSV_HEADER, DiagnosticsRecord, record


def test_field_block_header_format(tmp_path):
    g = Grid((16, 12), (2.0, 1.5))
    f = ScalarField(g, np.arange(16 * 12, dtype=float).reshape(16, 12) / 200.0)
    buf = io.BytesIO()
    fieldio.write_field_block(buf, f)
    raw = buf.getvalue()
    header, _, payload = raw.partition(b"\n")
    assert header.decode() == "CHFIELD v1 dim=2 n=16,12 length=2.0,1.5"
    assert len(payload) == 16 * 12 * 8
    assert np.frombuffer(payload, dtype="<f8").reshape(16, 12) == pytest.approx(f.values)


def test_field_block_roundtrip_bitwise(tmp_path):
    g = Grid(64, 3.0)
    rng = np.random.default_rng(0)
    f = ScalarField(g, rng.uniform(-1, 1, g.shape))
    buf = io.BytesIO()
    fieldio.write_field_block(buf, f, tags=("STEADY",), annotations={"name": "u"})
    buf.seek(0)
    back, tags, ann = fieldio.read_field_block(buf)
    assert np.array_equal(back.values, f.values)
    assert back.grid == g
    assert tags == ["STEADY"]
    assert ann == {"name": "u"}
    assert fieldio.read_field_block(buf) is None  # EOF


def test_field_block_rejects_garbage():
    buf = io.BytesIO(b"NOTAFIELD v1 dim=1\n")
    with pytest.raises(ValueError):
        fieldio.read_field_block(buf)
    buf = io.BytesIO(b"CHFIELD v1 dim=1 n=16 length=1.0\n\x00\x01")
    with pytest.raises(ValueError):
        fieldio.read_field_block(buf)  # truncated payload


def test_snapshot_roundtrip(tmp_path):
    g = Grid((16, 16), (1.0, 1.0))
    rng = np.random.default_rng(1)
    st = State(
        0.75,
        ScalarField(g, 0.5 * rng.uniform(-1, 1, g.shape)),
        ScalarField(g, 0.5 * rng.uniform(-1, 1, g.shape)),
    )
    path = tmp_path / "snap.chf"
    fieldio.write_snapshot(path, st)
    back = fieldio.read_snapshot(path)
    assert back.t == st.t
    assert np.array_equal(back.u.values, st.u.values)
    assert np.array_equal(back.v.values, st.v.values)


def test_steady_roundtrip(tmp_path):
    g = Grid(32, 2.0)
    st = State(
        0.0,
        ScalarField(g, np.full(g.shape, 0.25)),
        ScalarField(g, np.full(g.shape, -0.5)),
    )
    path = tmp_path / "steady.chf"
    fieldio.write_steady(path, st, (0.125, -2.5))
    with open(path, "rb") as fp:
        header = fp.readline().decode()
    assert "STEADY" in header and "mult_u=0.125" in header
    back, mult = fieldio.read_steady(path)
    assert mult == (0.125, -2.5)
    assert np.array_equal(back.u.values, st.u.values)
    with pytest.raises(ValueError):
        fieldio.write_snapshot(path, st)
        fieldio.read_steady(path)


def test_checkpoint_roundtrip(tmp_path):
    g = Grid(32, 2.0)
    rng = np.random.default_rng(2)
    st = State(
        1.25,
        ScalarField(g, 0.9 * rng.uniform(-1, 1, g.shape)),
        ScalarField(g, 0.9 * rng.uniform(-1, 1, g.shape)),
    )
    echo = {"tau": "0.01", "sigma": "1.0", "out_dir": "out"}
    path = tmp_path / "ck.chk"
    fieldio.write_checkpoint(path, st, 125, echo)
    back, step, echo2 = fieldio.read_checkpoint(path)
    assert step == 125
    assert back.t == st.t
    assert echo2 == echo
    assert np.array_equal(back.u.values, st.u.values)


def test_diagnostics_csv_roundtrip(tmp_path):
    g = Grid(32, 2.0)
    p = Parameters(sigma=1.0, c=0.1)
    st = State(
        0.0,
        ScalarField(g, np.full(g.shape, 0.3)),
        ScalarField(g, np.full(g.shape, 0.1)),
    )
    st2 = State(0.01, st.u, st.v)
    r0 = record(None, st, 0.01, p)
    r1 = record(st, st2, 0.01, p, step=1, newton_iters=3)
    path = tmp_path / "diag.csv"
    with fieldio.DiagnosticsWriter(path, {"tau": "0.01"}) as w:
        w.write(r0)
        w.write(r1)
    echo, recs = fieldio.read_diagnostics_csv(path)
    assert echo == {"tau": "0.01"}
    assert len(recs) == 2
    assert recs[0].energy_residual is None
    assert recs[1].newton_iters == 3
    # shortest-round-trip decimals reparse exactly
    for name in ("t", "mass_u", "mass_v", "psi", "psi_tilde", "oono_source"):
        assert getattr(recs[1], name) == getattr(r1, name)


def test_diagnostics_csv_header_check(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,step,nope\n")
    with pytest.raises(ValueError):
        fieldio.read_diagnostics_csv(path)
    path2 = tmp_path / "empty.csv"
    path2.write_text("# only comments\n")
    with pytest.raises(ValueError):
        fieldio.read_diagnostics_csv(path2)


def test_csv_header_constant():
    assert CSV_HEADER.startswith("t,step,mass_u,mass_v,psi,psi_hat,psi_tilde,")
    assert CSV_HEADER.endswith("newton_iters,energy_residual,steady_res_u,steady_res_v")
