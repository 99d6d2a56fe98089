import pytest

from weightlab.config import RunConfig, load_config, parse_config_text
from weightlab.errors import InvalidArgument


def test_defaults_are_valid():
    c = RunConfig()
    assert c.t_min < c.t_max and c.p_max > 0
    assert set(c.to_dict()) == {"p_max", "t_min", "t_max", "t_points", "ells", "tol_rel", "verdict_margin",
                                "output"}


def test_parse_and_coerce():
    d = parse_config_text("# comment\np_max = 200\nells = 0.5, 1, 2  # trailing\n\nt_max=1e4\n")
    assert d == {"p_max": 200, "ells": (0.5, 1.0, 2.0), "t_max": 1e4}


@pytest.mark.parametrize("text", ["p_max = 1\np_max = 2", "nope = 1", "p_max", "p_max = 2.5", "t_min = abc"])
def test_parse_rejects(text):
    with pytest.raises(InvalidArgument):
        parse_config_text(text)


@pytest.mark.parametrize("kw", [dict(t_min=10.0, t_max=1.0), dict(p_max=0), dict(t_points=1), dict(ells=()),
                                dict(tol_rel=-1.0)])
def test_validation(kw):
    with pytest.raises(InvalidArgument):
        RunConfig(**kw)


def test_flags_win_over_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("p_max = 100\nt_points = 50\n")
    c = load_config(str(f), {"p_max": 300, "t_min": None})
    assert c.p_max == 300 and c.t_points == 50 and c.t_min == RunConfig().t_min
    with pytest.raises(InvalidArgument):
        load_config(str(tmp_path / "missing.cfg"))
