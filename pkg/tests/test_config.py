import pytest

from chlab import ConfigError
from chlab.config import config_from_echo, parse_config, parse_config_text


def test_empty_config_gives_defaults():
    cfg = parse_config_text("")
    assert cfg.directives.dim == 1
    assert cfg.directives.n == (256,)
    assert cfg.scheme.tau == 1e-3
    assert cfg.scheme.newton_tol == 1e-10
    assert cfg.params.sigma == 1.0
    assert cfg.params.theta_u < cfg.params.theta0_u
    assert cfg.warnings == ()


def test_comments_and_blank_lines():
    cfg = parse_config_text("# a comment\n\nsigma = 2.5  # inline\n")
    assert cfg.params.sigma == 2.5


def test_invalid_c_reports_constraint():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("c = 1.5\n")
    msgs = [str(v) for v in exc.value.violations]
    assert any("InvalidValue" in m and "|c| < 1" in m for m in msgs)


def test_all_violations_reported_not_just_first():
    text = "c = 1.5\ntau = -1\nn = 4\ninit_kind = bogus\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    keys = {v.key for v in exc.value.violations}
    assert {"c", "tau", "n", "init_kind"} <= keys


def test_strict_h0_mode_switch():
    text = "theta_u = 2\ntheta0_u = 1\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text + "strict_h0 = true\n")
    assert any("double-well" in str(v) for v in exc.value.violations)
    cfg = parse_config_text(text + "strict_h0 = false\n")
    assert cfg.params.theta_u == 2.0
    assert any("double-well" in w for w in cfg.warnings)


def test_unknown_key_warning_vs_strict():
    cfg = parse_config_text("frobnicate = 1\n")
    assert any("UnknownKey" in w and "frobnicate" in w for w in cfg.warnings)
    with pytest.raises(ConfigError):
        parse_config_text("frobnicate = 1\n", strict=True)


def test_scalar_n_expands_in_2d():
    cfg = parse_config_text("dim = 2\nn = 64\nlength = 3.0\n")
    assert cfg.directives.n == (64, 64)
    assert cfg.directives.length == (3.0, 3.0)
    cfg2 = parse_config_text("dim = 2\nn = 64,32\nlength = 3.0,1.5\n")
    assert cfg2.directives.n == (64, 32)


def test_cutoff_delta_none_and_value():
    assert parse_config_text("cutoff_delta = none\n").scheme.cutoff_delta is None
    assert parse_config_text("cutoff_delta = 0.2\n").scheme.cutoff_delta == 0.2
    with pytest.raises(ConfigError):
        parse_config_text("cutoff_delta = 1.2\n")


def test_viscous_flag_follows_alpha():
    assert parse_config_text("alpha_visc = 0.1\n").scheme.viscous is True
    assert parse_config_text("alpha_visc = 0\n").scheme.viscous is False


def test_echo_roundtrip(tmp_path):
    text = (
        "dim = 2\nn = 32,16\nlength = 2.0,1.0\nsigma = 0.7\nc = -0.2\n"
        "coupling_a = 0.3\nalpha_visc = 0.05\ntau = 0.004\nt_end = 2.5\n"
        "seed = 9\namplitude = 0.02\nmean_u = 0.15\nmean_v = -0.05\n"
        "snapshot_stride = 10\ncsv_stride = 2\nout_dir = results\n"
    )
    cfg = parse_config_text(text)
    back = config_from_echo(cfg.echo())
    assert back.params == cfg.params
    assert back.scheme == cfg.scheme
    assert back.directives == cfg.directives

    path = tmp_path / "run.cfg"
    path.write_text(text)
    from_file = parse_config(path)
    assert from_file.params == cfg.params


def test_echo_contains_every_documented_key():
    cfg = parse_config_text("")
    expected = {
        "dim", "n", "length", "sigma", "c", "theta_u", "theta0_u", "theta_v",
        "theta0_v", "eps_u", "eps_v", "coupling_a", "coupling_b", "coupling_c",
        "alpha_visc", "cutoff_delta", "tau", "t_end", "newton_tol",
        "newton_max_iter", "safeguard_margin", "adaptive", "strict_h0",
        "init_kind", "seed", "amplitude", "mean_u", "mean_v",
        "snapshot_stride", "csv_stride", "out_dir",
    }
    assert set(cfg.echo().keys()) == expected
