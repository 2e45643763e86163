import pytest

from phase_minmax.config import RunConfig, apply_overrides, load_config
from phase_minmax.errors import ParameterError


def test_defaults_valid():
    cfg = RunConfig()
    cfg.validate()
    d = cfg.as_dict()
    assert d["lambda"] == 1.0 and d["manifold"] == "s2"


def test_load_sections():
    cfg = load_config(text="""
[run]
manifold = s3
grid = 400
epsilon = 0.02
lambda = 0.5
path_nodes = 17

[competitor]
samples = 9

[tube]
theta_star = none
""")
    assert (cfg.manifold, cfg.grid, cfg.epsilon, cfg.lam, cfg.path_nodes) == ("s3", 400, 0.02, 0.5, 17)
    assert cfg.competitor.samples == 9 and cfg.tube.theta_star is None


def test_load_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nepsilon = 0.1\n")
    assert load_config(p).epsilon == 0.1


@pytest.mark.parametrize("text", [
    "[run]\nbogus = 1\n",
    "[nosuch]\nx = 1\n",
    "[run]\nepsilon = 0.3\n",
    "[run]\nepsilon = -0.1\n",
    "[run]\nlambda = 0\n",
    "[run]\ngrid = many\n",
    "[run]\nmanifold = torus\n",
    "[run]\npath_nodes = 8\n",
    "[tube]\ntheta_star = 4\n",
    "[errors]\neps_values = 1e-12, 1e-11\n",
])
def test_bad_config(text):
    with pytest.raises(ParameterError):
        load_config(text=text)


def test_overrides_validate():
    cfg = RunConfig()
    apply_overrides(cfg, epsilon=0.01, lam=None)
    assert cfg.epsilon == 0.01 and cfg.lam == 1.0
    with pytest.raises(ParameterError):
        apply_overrides(cfg, grid=-5)


def test_tau_zero_is_a_valid_input():
    cfg = RunConfig()
    apply_overrides(cfg, tau=0.0)
    assert cfg.tau == 0.0
    with pytest.raises(ParameterError):
        apply_overrides(cfg, tau=-1.0)
