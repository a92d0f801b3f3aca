import pytest

from accs.config import ConfigError, default_config, load_config, parse_config


def test_defaults_and_ranges():
    cfg = parse_config("experiment = l_sweep\nk = 1..3, 7\nL = 10..40..10\nnoise_ratio = 0, 0.01\n")
    assert cfg.k == [1, 2, 3, 7]
    assert cfg.L == [10, 20, 30, 40]
    assert cfg.noise_ratio == [0.0, 0.01]
    assert cfg.trials == 10 and cfg.N == 256


def test_comments_dashes_and_aliases():
    cfg = parse_config("# header\nsuccess-target = 0.8  # trailing\nlambda = 1e-4\n"
                       "normalized = yes\nstage_tol = none\n")
    assert cfg.success_target == 0.8
    assert cfg.lambda_factor == 1e-4
    assert cfg.normalized is True
    assert cfg.stage_tol is None


def test_defaults_are_overridden_by_file():
    cfg = parse_config("trials = 3\n", **default_config("coil_sweep"))
    assert cfg.n1 == 23 and cfg.basis == "sin2d" and cfg.trials == 3


@pytest.mark.parametrize("text,msg", [
    ("bogus = 1\n", ":1: unknown key"),
    ("k = 1\nk = 2\n", ":2: duplicate key"),
    ("k = 5..3\n", ":1: bad value"),
    ("k = 1,,2\n", ":1: bad value"),
    ("trials = many\n", ":1: bad value"),
    ("just text\n", ":1: expected"),
    ("normalized = maybe\n", ":1: bad value"),
    ("success_threshold = inf\n", ":1: success_threshold must be finite"),
])
def test_errors_carry_line_numbers(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text, source="cfg")


@pytest.mark.parametrize("text", [
    "L = 300\n", "trials = 0\n", "experiment = nope\n", "lambda_select = best\n",
    "basis = wavelet\n", "noise_ratio = -0.1\n", "step_mode = fixed\n", "l_search = guess\n",
    "seed = -1\n", "threads = 0\n",
])
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("experiment = certify\n")
    assert load_config(p, **default_config("certify")).n1 == 64
    p.write_bytes(b"\xff\xfe")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        default_config("nothing")
