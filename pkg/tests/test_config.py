import math

import pytest

from pvbatt.config import ConfigError, RunConfig, load_config, parse_config
from pvbatt.profiles import BuildingType


def test_defaults_without_file():
    conf = load_config(None)
    assert conf == RunConfig()
    assert conf.system.p_supply == 240.0
    assert conf.spec.pv_sizes[0] == 0.2 and len(conf.spec.batt_sizes) == 11


def test_full_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("""
[system]
eta_ch = 0.9
lam = 0.05
cyclic_soc = true

[tariffs]
tiers = [[10, 100.0], [inf, 80.0]]
market_revenue = 35.0
surcharge_fit_only = true

[costs]
batt_capex = 600
decay = 0.99

[sweep]
pv_sizes = [0.5, 1.0]
batt_sizes = [0.0, 1.0]
objectives = ["cost"]
scenarios = ["none"]

[solver]
lp_method = "highs"

[profiles]
default_type = "museum"
""")
    conf = load_config(path)
    assert conf.system.eta_ch == 0.9 and conf.system.cyclic_soc
    assert conf.system.tariffs.fit_rate(50) == 80.0
    assert math.isinf(conf.system.tariffs.tiers[-1][0])
    assert conf.system.tariffs.market_revenue == 35.0
    assert conf.surcharge_fit_only
    assert conf.costs.batt_capex == 600 and conf.costs.decay == 0.99
    assert conf.spec.pv_sizes == (0.5, 1.0) and conf.spec.objectives == ("cost",)
    assert conf.lp_method == "highs"
    assert conf.default_type is BuildingType.MUSEUM


@pytest.mark.parametrize("data,match", [
    ({"extra": {}}, "unknown sections"),
    ({"system": {"eta": 0.9}}, "unknown keys"),
    ({"system": {"eta_ch": 2.0}}, "eta_ch"),
    ({"solver": {"lp_method": "interior"}}, "lp_method"),
    ({"profiles": {"default_type": "castle"}}, "castle"),
    ({"sweep": {"pv_sizes": []}}, "pv_sizes"),
])
def test_invalid_values(data, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(data)


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[system\neta_ch = 1\n")
    with pytest.raises(ConfigError, match="bad.toml"):
        load_config(path)
