import pytest

from lsideficit.config import ConfigError, load_config, parse_config
from lsideficit.verify import DEFAULT_CATALOG, DEFAULT_PAIRS


def write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


class TestDefaults:
    def test_empty_document(self):
        cfg = parse_config({})
        assert cfg.catalog == DEFAULT_CATALOG
        assert cfg.pairs == DEFAULT_PAIRS
        assert cfg.suite.c_ce == 1.0 and cfg.suite.tolerance is None

    def test_shipped_configs_parse(self):
        from pathlib import Path
        root = Path(__file__).resolve().parents[1] / "configs"
        for path in root.glob("*.toml"):
            load_config(path)


class TestParsing:
    def test_full_document(self, tmp_path):
        cfg = load_config(write(tmp_path, """
[grid]
nodes = 2049
[tolerance]
override = 1e-6
[constants]
c_ce = 0.5
moment_bound = 3.0
alpha = 0.2
[catalog]
default = false
densities = [{ family = "scale", sigma = 1.5 }]
[metrics]
default_pairs = false
atoms = 32
pairs = [[{ family = "gaussian" }, { family = "tilt", b = 1.0 }]]
[[sweep]]
name = "s"
family = { family = "scale" }
parameter = "sigma"
start = 1.5
stop = 1.1
count = 3
[output]
csv = "r.csv"
"""))
        assert cfg.suite.resolution.nodes == 2049
        assert cfg.suite.tolerance == 1e-6
        assert cfg.suite.moment_bound == 3.0 and cfg.suite.alpha == 0.2
        assert cfg.catalog == ({"family": "scale", "sigma": 1.5},)
        assert len(cfg.pairs) == 1 and cfg.suite.atoms == 32
        assert cfg.sweeps[0].count == 3 and cfg.csv == "r.csv"

    def test_syntax_error_has_position(self, tmp_path):
        with pytest.raises(ConfigError, match="line 2"):
            load_config(write(tmp_path, "[grid]\nnodes = = 3\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.toml")

    @pytest.mark.parametrize("doc, match", [
        ({"grid": {"nodes": 10}}, "odd"),
        ({"grid": {"nodes": 3}}, ">= 9"),
        ({"grid": {"nodez": 9}}, "unknown keys"),
        ({"bogus": {}}, "unknown keys"),
        ({"tolerance": {"override": 0.0}}, "> 0"),
        ({"constants": {"c_ce": -1.0}}, "c_ce"),
        ({"constants": {"growth_eps": 7.0}}, "growth_eps"),
        ({"constants": {"alpha": 1.5}}, "alpha"),
        ({"constants": {"moment_bound": 0.5}}, "moment_bound"),
        ({"constants": {"c_ce": True}}, "number"),
        ({"catalog": {"default": False}}, "empty"),
        ({"catalog": {"densities": [{"family": "nope"}]}}, "densities\\[0\\]"),
        ({"metrics": {"pairs": [[{"family": "gaussian"}]]}}, "two-element"),
        ({"metrics": {"atoms": 2}}, "atoms"),
        ({"sweep": [{"family": {"family": "scale"}}]}, "missing"),
        ({"sweep": [{"family": {"family": "scale"}, "parameter": "sigma", "start": 1,
                     "stop": 2, "count": 3, "spacing": "cubic"}]}, "spacing"),
        ({"run": {"workers": 0}}, "workers"),
    ])
    def test_validation(self, doc, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(doc)
