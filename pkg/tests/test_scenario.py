"""Scenario construction, generation determinism, persistence."""
import dataclasses
import math

import numpy as np
import pytest

from tactile_ra.scenario import (ConfigError, channel_gain, config_from_dict,
                                 config_to_dict, dbm_to_watts, default_config,
                                 generate, load_config, save_config,
                                 save_scenario, watts_to_dbm)


def test_dbm_to_watts_known_points():
    assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)
    assert dbm_to_watts(0.0) == pytest.approx(0.001, rel=1e-12)
    # 10^1.6, frozen from a high-precision evaluation
    assert dbm_to_watts(46.0) == pytest.approx(39.810717055349725, rel=1e-12)
    assert watts_to_dbm(dbm_to_watts(17.3)) == pytest.approx(17.3, rel=1e-12)


def test_channel_gain_unit_distance():
    # d^-alpha with d=1 and unit fade leaves the reference gain untouched
    assert channel_gain(1.0, 1.0, 3.0, 1.0) == pytest.approx(1.0)
    assert channel_gain(2.5e-13, 1.0, 3.0, 1.0) == pytest.approx(2.5e-13)


def test_channel_gain_distance_monotonic():
    g = [channel_gain(1e-13, d, 3.0, 1.0) for d in (0.1, 0.4, 0.9, 1.5)]
    assert all(a > b for a, b in zip(g, g[1:]))


def test_generate_deterministic(table_config):
    a = generate(table_config, 42)
    b = generate(table_config, 42)
    assert np.array_equal(a.channel_ul, b.channel_ul)
    assert np.array_equal(a.channel_dl, b.channel_dl)
    assert a.users == b.users
    assert a.teleoperators == b.teleoperators
    assert a.pairing == b.pairing
    c = generate(table_config, 43)
    assert not np.array_equal(a.channel_ul, c.channel_ul)


def test_generate_structure():
    cfg = default_config(num_sbs=4, users_per_bs=5, num_ul_subcarriers=8)
    scn = generate(cfg, 0)
    assert scn.num_bs == 5                        # 4 SBS + 1 MBS
    assert np.allclose(scn.bs_positions[0], 0.0)  # MBS at index 0
    assert scn.num_users == 4 * 5                 # tactile users live at SBSs
    # 8 UL gains per (user, BS) pair
    assert scn.channel_ul.shape == (20, 5, 8)
    assert scn.num_teleops == scn.num_users
    assert scn.validate() == []
    # SBSs equidistant from the MBS
    d = np.hypot(scn.bs_positions[1:, 0], scn.bs_positions[1:, 1])
    assert np.allclose(d, d[0])


def test_generate_pairing_is_injective(table_config):
    scn = generate(table_config, 5)
    paired = [t for t in scn.pairing if t >= 0]
    assert len(paired) == len(set(paired))
    assert all(0 <= t < scn.num_teleops for t in paired)


def test_generate_rejects_bad_config(table_config):
    bad = dataclasses.replace(table_config, violation_prob_ul=1.5, num_ul_subcarriers=0)
    with pytest.raises(ConfigError) as err:
        generate(bad, 0)
    msgs = "\n".join(err.value.violations)
    assert "violation_prob_ul" in msgs
    assert "num_ul_subcarriers" in msgs


def test_config_roundtrip(tmp_path, table_config):
    path = tmp_path / "cfg.json"
    save_config(table_config, path)
    assert load_config(path) == table_config


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.json")


def test_load_rejects_unknown_keys(tmp_path, table_config):
    doc = config_to_dict(table_config)
    doc["mystery_knob"] = 3
    import json
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="unknown key: mystery_knob"):
        load_config(path)


def test_load_parse_error_has_line_info(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"num_sbs": 2,\n  "oops')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_load_validates_probability(tmp_path, table_config):
    doc = config_to_dict(table_config)
    doc["violation_prob_ul"] = 1.5
    import json
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="violation_prob_ul"):
        load_config(path)


def test_config_from_dict_missing_key(table_config):
    doc = config_to_dict(table_config)
    del doc["noise_psd"]
    with pytest.raises(ConfigError, match="missing key: noise_psd"):
        config_from_dict(doc)


def test_scenario_dump(tmp_path, table_config):
    scn = generate(table_config, 1)
    path = tmp_path / "scn.json"
    save_scenario(scn, path)
    import json
    doc = json.loads(path.read_text())
    assert doc["config"]["num_sbs"] == table_config.num_sbs
    arr = np.asarray(doc["channel_ul"])
    assert arr.shape == scn.channel_ul.shape     # user-major, BS, subcarrier
    assert np.allclose(arr, scn.channel_ul)


def test_generated_scenario_passes_own_validator():
    for seed in range(5):
        cfg = default_config(num_sbs=2, users_per_bs=3, rng_seed=seed)
        assert generate(cfg, seed).validate() == []


def test_fades_are_unit_mean(table_config):
    # squared-Rayleigh power fading: exponential with mean 1
    scn = generate(dataclasses.replace(table_config, users_per_bs_per_service=5), 9)
    d = np.maximum(np.hypot(*(scn.bs_positions[None, :, :] -
                              np.array([u.position for u in scn.users])[:, None, :]
                              ).transpose(2, 0, 1)), 0.035)
    base = scn.config.pathloss_ref_gain * d ** (-scn.config.pathloss_exponent)
    fades = scn.channel_ul / base[:, :, None]
    assert abs(fades.mean() - 1.0) < 0.05
    assert fades.min() >= 0.0
