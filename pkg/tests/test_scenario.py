import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from lvdc_ems.scenario import (BatteryParams, ConfigParseError, GridParams, PowerProfile,
                               ProfileLengthError, Scenario, ScenarioError, TimeGrid,
                               dump_scenario, format_profile_csv, load_scenario,
                               load_scenario_file, net_power, parse_profile_csv, save_scenario,
                               scenario_digest, synth_profiles)

BASE_CONFIG = """
schema_version: 1
name: test
time: {t_start: 0.0, step_hours: 0.5, n_steps: 48}
battery: {soe_init: 0.35, soe_min: 0.05, soe_max: 0.95}
profiles: {synth: {seed: 3, pv_peak: 0.05, load_base: 0.02}}
"""


def _csv(values):
    return format_profile_csv(PowerProfile(tuple(values), "pv"))


def _scn(pv, load):
    n = len(pv)
    return Scenario(TimeGrid(step_hours=1.0, n_steps=n), PowerProfile(tuple(pv), "pv"),
                    PowerProfile(tuple(load), "load"))


def test_valid_config_accepted():
    scn = load_scenario(BASE_CONFIG)
    assert scn.battery.soe_init == 0.35
    assert (scn.battery.soe_min, scn.battery.soe_max) == (0.05, 0.95)
    assert scn.n_steps == 48 and scn.dt == 0.5


def test_soe_init_below_min_rejected():
    text = BASE_CONFIG.replace("soe_min: 0.05", "soe_min: 0.5")
    with pytest.raises(ScenarioError, match="soe_init below soe_min"):
        load_scenario(text)


def test_short_profile_rejected():
    text = BASE_CONFIG.replace("profiles: {synth: {seed: 3, pv_peak: 0.05, load_base: 0.02}}", "")
    with pytest.raises(ProfileLengthError):
        load_scenario(text, pv_csv=_csv([0.0] * 47), load_csv=_csv([0.0] * 48))


def test_missing_schema_version_rejected():
    with pytest.raises(ScenarioError):
        load_scenario(BASE_CONFIG.replace("schema_version: 1", "schema_version: 2"))


def test_malformed_yaml_rejected():
    with pytest.raises(ConfigParseError):
        load_scenario("schema_version: [1")


def test_unknown_key_rejected():
    text = BASE_CONFIG.replace("soe_max: 0.95}", "soe_max: 0.95, capacity: 3}")
    with pytest.raises(ScenarioError, match="unknown keys"):
        load_scenario(text)


def test_profile_csv_header_and_indices():
    assert parse_profile_csv("step_index,power_kw\n0,1.5\n1,2\n", "pv") == (1.5, 2.0)
    with pytest.raises(ConfigParseError):
        parse_profile_csv("idx,kw\n0,1\n", "pv")
    with pytest.raises(ConfigParseError):
        parse_profile_csv("step_index,power_kw\n0,1\n2,1\n", "pv")
    with pytest.raises(ConfigParseError):
        parse_profile_csv("step_index,power_kw\n0,abc\n", "pv")


def test_negative_profile_value_rejected():
    with pytest.raises(ScenarioError):
        PowerProfile((0.1, -0.2), "load")


def test_battery_from_cells_scales():
    b = BatteryParams.from_cells(series=2, parallel=3)
    assert b.e_nom == pytest.approx(0.072 * 6)
    assert b.c_nom == 36.0 and b.v_nom == 12.0


def test_grid_sign_conventions():
    with pytest.raises(ScenarioError):
        GridParams(p_buy_max=-1.0)
    with pytest.raises(ScenarioError):
        GridParams(p_sell_max=1.0)


def test_horizon_longer_than_a_day_needs_multi_day():
    with pytest.raises(ScenarioError):
        TimeGrid(step_hours=1.0, n_steps=25)
    assert TimeGrid(step_hours=1.0, n_steps=25, multi_day=True).horizon_hours == 25


@pytest.mark.parametrize("pv,load,expected", [
    ([1.0], [0.4], [0.6]),
    ([0.0, 0.0], [0.0, 0.0], [0.0, 0.0]),
    ([0.2, 1.5], [1.0, 0.5], [-0.8, 1.0]),
])
def test_net_power_examples(pv, load, expected):
    np.testing.assert_allclose(net_power(_scn(pv, load)), expected)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=6).flatmap(
    lambda pv: st.tuples(st.just(pv), st.lists(st.floats(0, 10), min_size=len(pv),
                                               max_size=len(pv)))),
       st.floats(0, 100))
def test_net_power_is_linear(profiles, a):
    pv, load = profiles
    scaled = _scn([a * v for v in pv], [a * v for v in load])
    np.testing.assert_allclose(net_power(scaled), a * net_power(_scn(pv, load)),
                               rtol=1e-12, atol=1e-9)


def test_synth_profiles():
    grid = TimeGrid()
    pv, load = synth_profiles(1, grid, 2.0, 0.5)
    assert pv.values[0] == 0.0
    assert max(pv.values) > 0
    assert synth_profiles(1, grid, 2.0, 0.5) == (pv, load)
    zero, _ = synth_profiles(1, grid, 0.0, 0.5)
    assert set(zero.values) == {0.0}


def test_dump_and_reload_identical(tmp_path):
    scn = load_scenario(BASE_CONFIG)
    config, pv, load = dump_scenario(scn)
    assert load_scenario(config, pv, load) == scn
    path = save_scenario(scn, tmp_path / "s")
    assert load_scenario_file(path) == scn
    assert scenario_digest(load_scenario_file(path)) == scenario_digest(scn)


def test_digest_changes_with_content():
    scn = load_scenario(BASE_CONFIG)
    other = scn.with_profiles(load=[v + 0.001 for v in scn.load.values])
    assert scenario_digest(scn) != scenario_digest(other)


def test_profile_csv_uses_lf_and_header():
    text = _csv([0.5, 0.25])
    assert text == "step_index,power_kw\n0,0.5\n1,0.25\n"


def test_tariff_preset_and_override():
    text = BASE_CONFIG + "tariff: {preset: paper-actual, sell: 0.05}\n"
    t = load_scenario(text).tariff
    assert (t.buy_offpeak, t.buy_onpeak, t.sell) == (0.1360, 0.1821, 0.05)
    with pytest.raises(ScenarioError):
        load_scenario(BASE_CONFIG + "tariff: {preset: nope}\n")


fraction = st.floats(0, 1)


@given(fraction, fraction, fraction)
def test_battery_validation_consistent(lo, hi, init):
    ok = lo <= hi and lo <= init <= hi
    doc = yaml.safe_load(BASE_CONFIG)
    doc["battery"] = {"soe_min": lo, "soe_max": hi, "soe_init": init}
    text = yaml.safe_dump(doc)
    if ok:
        scn = load_scenario(text)
        assert scn.battery.soe_min <= scn.battery.soe_init <= scn.battery.soe_max
        assert load_scenario(dump_scenario(scn)[0], *dump_scenario(scn)[1:]) == scn
    else:
        with pytest.raises(ScenarioError):
            load_scenario(text)


@given(st.floats(-1, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_terminal_and_power_limits_consistent(terminal, p_ch, p_dis):
    doc = yaml.safe_load(BASE_CONFIG)
    doc["terminal_soe"] = terminal
    doc["battery"].update(p_charge_max=p_ch, p_discharge_max=p_dis)
    ok = 0.05 <= terminal <= 0.95 and p_ch <= 0 and p_dis >= 0
    if ok:
        assert load_scenario(yaml.safe_dump(doc)).terminal_soe_constraint == terminal
    else:
        with pytest.raises(ScenarioError):
            load_scenario(yaml.safe_dump(doc))
