import pytest

from lsideficit.oracles import ORACLES, OracleResult, prokhorov_subsets


class TestOracles:
    @pytest.mark.parametrize("name", sorted(ORACLES))
    def test_each_oracle_passes(self, name):
        res = ORACLES[name]()
        assert isinstance(res, OracleResult)
        assert res.passed, f"{name}: {res.discrepancy:.3e}"

    def test_prokhorov_seeds_differ(self):
        a, b = prokhorov_subsets(trials=5, seed=1), prokhorov_subsets(trials=5, seed=2)
        assert a.passed and b.passed
