import pytest

from nrsim.config import ConfigError, RicConfig, ScenarioConfig, config_from_dict, load_config


def test_table_defaults():
    c = ScenarioConfig()
    assert (c.bandwidth_hz, c.mu, c.carrier_freq_ghz, c.packet_bytes, c.n_gnb) == (20e6, 2, 3.5, 1000, 1)
    assert c.duration_ttis * c.slot_ms == 3000.0
    assert c.carrier.subcarrier_spacing_khz == 60.0
    assert c.measurement_start == 400
    assert c.ric == RicConfig()


def test_short_runs_measure_from_zero():
    assert ScenarioConfig(duration_ttis=100).measurement_start == 0


def test_all_problems_reported_together():
    with pytest.raises(ConfigError) as e:
        ScenarioConfig(n_ues=0, policy="edf", traffic="poisson", n_gnb=2)
    assert len(e.value.problems) == 4


@pytest.mark.parametrize("kw", [dict(mu=5), dict(duration_ttis=0), dict(fixed_demand_class=4),
                                dict(direction_mix=1.5), dict(n_prb=40), dict(ric={"report_period": 0}),
                                dict(mcs_table="256qam"), dict(cell_radius_m=5)])
def test_invalid_fields(kw):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kw)


def test_unknown_keys():
    with pytest.raises(ConfigError) as e:
        config_from_dict({"n_uez": 3, "ric": {"period": 1}})
    assert "n_uez" in str(e.value) and "ric.period" in str(e.value)


def test_load_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("n_ues: 4\npolicy: pf\nric:\n  report_period: 20\nsweep:\n  seeds: 1-3\n")
    c = load_config(p)
    assert (c.n_ues, c.policy, c.ric.report_period) == (4, "pf", 20)


def test_replace_merges_ric():
    c = ScenarioConfig().replace(ric={"report_period": 10}, n_ues=3)
    assert c.ric.report_period == 10 and c.n_ues == 3
    assert c.to_dict()["ric"]["report_period"] == 10


def test_shipped_configs_load():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "configs"
    c = load_config(root / "heterogeneous.yaml")
    assert (c.n_ues, c.tx_power_dbm, c.fixed_demand_class) == (7, 5.0, 3)


def test_yaml_numbers_without_exponent_sign(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("bandwidth_hz: 20.0e6\nn_ues: '5'\n")
    c = load_config(p)
    assert c.bandwidth_hz == 20e6 and c.n_ues == 5


def test_bad_scalar_types_are_listed():
    with pytest.raises(ConfigError) as e:
        config_from_dict({"tx_power_dbm": "loud", "n_ues": "x"})
    assert len(e.value.problems) == 2 and "tx_power_dbm" in str(e.value)


def test_default_config_file_matches_builtin_defaults():
    from pathlib import Path

    from nrsim.config import load_yaml

    data = load_yaml(Path(__file__).resolve().parent.parent / "configs" / "default.yaml")
    assert config_from_dict(data) == ScenarioConfig()
