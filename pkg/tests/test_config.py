import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kzopen import config as cfgmod
from kzopen.config import ConfigError, ExperimentConfig, format_value, parse_value

BASE = """\
model.J = 1
bath.gamma = 0.05
bath.s = 1
ramp.alpha = 1
ramp.beta = 1
ramp.dmu_i = -2
ramp.T_i = 0.5
sweep.log_min = 2
sweep.log_max = 4
sweep.n = 5
"""


def test_parse_values():
    assert parse_value("pi/4") == math.pi / 4
    assert parse_value("true") is True
    assert parse_value("[1, 2e3]") == [1, 2000.0]
    assert parse_value("'text'") == "text"
    assert parse_value("local") == "local"
    with pytest.raises(ValueError):
        parse_value("__import__('os')")


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_float_round_trip_bit_exact(x):
    assert parse_value(format_value(x)) == x


def test_text_round_trip():
    cfg = cfgmod.loads(BASE + "ramps.a.alpha = 2\nramps.a.beta = 1\n"
                       "ramps.a.radius = 1\nramps.a.theta = pi/3\n"
                       "analysis.window = [10, 1e4]\noutput.variants = [no_kappa]\n")
    again = cfgmod.loads(cfg.to_text())
    assert again.to_text() == cfg.to_text()
    assert again.fingerprint("a") == cfg.fingerprint("a")


def test_header_parsing():
    text = "# kzopen kind=sweep\n" + "".join(f"# config: {l}\n" for l in BASE.splitlines())
    text += "t_f,E\n1,2\n"
    cfg = cfgmod.loads(text, header=True)
    assert cfg.ramp["T_i"] == 0.5
    assert cfg.fingerprint() == cfgmod.loads(BASE).fingerprint()


@pytest.mark.parametrize("extra, path", [
    ("bath.gama = 1\n", "bath.gama"),
    ("sweep.t_f = [10]\n", "sweep"),
    ("ramp.radius = 1\n", "ramp"),
    ("analysis.window = [10, 1]\n", "analysis.window"),
    ("model.side = middle\n", "model.side"),
    ("dynamics.depth = 2.5\n", "dynamics.depth"),
    ("ramp.alpha = 2\n", "ramp.alpha"),
    ("nonsense\n", "line 11"),
])
def test_errors_name_the_field(extra, path):
    with pytest.raises(ConfigError) as err:
        cfgmod.loads(BASE + extra)
    assert err.value.path == path


def test_missing_exponent():
    with pytest.raises(ConfigError) as err:
        cfgmod.loads("ramp.alpha = 1\nramp.T_i = 1\n")
    assert err.value.path == "ramp.beta"


def test_theta_expansion():
    cfg = cfgmod.loads("ramp.alpha = 1\nramp.beta = 1\nramp.radius = 2\n"
                       "ramp.theta = pi/6\n")
    r = cfg.ramp_spec()
    assert r.T_i == pytest.approx(1.0, rel=1e-15)
    assert r.dmu_i == pytest.approx(-math.sqrt(3.0), rel=1e-15)
    above = cfgmod.loads("model.side = above\nramp.alpha = 1\nramp.beta = 1\n"
                         "ramp.radius = 2\nramp.theta = pi/6\n")
    assert above.ramp_spec().dmu_i == pytest.approx(math.sqrt(3.0), rel=1e-15)
    with pytest.raises(ConfigError) as err:
        cfgmod.loads("ramp.alpha = 1\nramp.beta = 1\nramp.radius = 2\nramp.theta = 2\n")
    assert err.value.path == "ramp.theta"


def test_fingerprint_ignores_non_physical_keys():
    fp = cfgmod.loads(BASE).fingerprint()
    for extra in ("dynamics.verify_grid = true\n", "dynamics.grid_tol = 0.1\n",
                  "output.directory = elsewhere\n", "analysis.t0 = 3\n"):
        assert cfgmod.loads(BASE + extra).fingerprint() == fp
    assert cfgmod.loads(BASE.replace("sweep.n = 5", "sweep.n = 7")).fingerprint() == fp
    assert cfgmod.loads(BASE).dynamics_options(threads=3).threads == 3
    assert cfgmod.loads(BASE + "dynamics.kappa = 0\n").fingerprint() != fp
    assert cfgmod.loads(BASE.replace("T_i = 0.5", "T_i = 0.5000000000000001")).fingerprint() != fp


def test_sweep_points():
    pts = cfgmod.loads(BASE).sweep_points()
    np.testing.assert_allclose(pts, [1e2, 10**2.5, 1e3, 10**3.5, 1e4], rtol=1e-15)
    one = cfgmod.loads(BASE.replace("sweep.n = 5", "sweep.n = 1"))
    assert one.sweep_points() == [100.0]
    zero = cfgmod.loads(BASE.replace("sweep.n = 5", "sweep.n = 0"))
    assert zero.sweep_points() == []
    lst = cfgmod.loads(BASE.replace("sweep.log_min = 2\nsweep.log_max = 4\nsweep.n = 5\n",
                                    "sweep.t_f = [10, 1e3]\n"))
    assert lst.sweep_points() == [10.0, 1000.0]


def test_named_ramps_take_precedence():
    cfg = cfgmod.loads(BASE + "ramps.x.alpha = 2\nramps.x.beta = 1\nramps.x.T_i = 1\n")
    assert cfg.ramp_names() == ["x"]
    assert cfg.ramp_spec("x", 10.0).alpha == 2.0
    with pytest.raises(ConfigError):
        cfg.ramp_spec("y")
    assert isinstance(cfg, ExperimentConfig)
