"""SINR / rate / interference reference formulas and C1-C4 checks."""
import math

import numpy as np
import pytest

from conftest import make_scenario
from tactile_ra.radio import (DlAllocation, UlAllocation, check_radio_constraints,
                              dl_interference, dl_rate, paired_dl_rate,
                              ul_interference, ul_rate)
from tactile_ra.scenario import dbm_to_watts, default_config, generate


def two_cell(gains_ul=None, K=2):
    # 2 users, one per SBS, J=2
    if gains_ul is None:
        gains_ul = np.full((2, 3, K), 1e-13)
    gains_dl = np.full((2, 3, K), 1e-13)
    return make_scenario(user_bs=[1, 2], teleop_bs=[1, 2], pairing=[0, 1],
                         gains_ul=gains_ul, gains_dl=gains_dl, users_per_bs=1)


def test_single_cell_interference_is_zero():
    scn = make_scenario(user_bs=[1, 1], teleop_bs=[1, 1], pairing=[0, 1],
                        gains_ul=np.full((2, 2, 2), 1e-12),
                        gains_dl=np.full((2, 2, 2), 1e-12), users_per_bs=2)
    ul = UlAllocation.empty(2, 2)
    ul.assign[0, 0] = True
    ul.power[0, 0] = 0.1
    ul.assign[1, 1] = True
    ul.power[1, 1] = 0.1
    for u in range(2):
        for k in range(2):
            assert ul_interference(scn, ul, u, k) == 0.0
    dl = DlAllocation.empty(2, 2)
    dl.assign[0, 0] = True
    dl.power[0, 0] = 1.0
    assert dl_interference(scn, dl, 1, 0) == 0.0


def test_two_cell_single_interferer():
    gains = np.full((2, 3, 1), 1e-13)
    gains[1, 1, 0] = 0.5                     # cross gain: user 1 into BS 1
    scn = two_cell(gains, K=1)
    ul = UlAllocation.empty(2, 1)
    ul.assign[:, 0] = True
    ul.power[0, 0] = 0.2
    ul.power[1, 0] = 1.0
    assert ul_interference(scn, ul, 0, 0) == pytest.approx(0.5)


def test_interference_matches_bruteforce_sum():
    rng = np.random.default_rng(7)
    scn = generate(default_config(num_sbs=3, users_per_bs=3), 11)
    K = scn.config.num_ul_subcarriers
    ul = UlAllocation.empty(scn.num_users, K)
    for u in range(scn.num_users):
        k = int(rng.integers(0, K))
        ul.assign[u, k] = True
        ul.power[u, k] = rng.uniform(0, 0.1)
    for u in range(scn.num_users):
        j = scn.users[u].bs_id
        for k in range(K):
            expected = 0.0
            for v in range(scn.num_users):     # independent direct summation
                if scn.users[v].bs_id != j and ul.assign[v, k]:
                    expected += ul.power[v, k] * scn.channel_ul[v, j, k]
            assert ul_interference(scn, ul, u, k) == pytest.approx(expected, rel=1e-12)


def test_ul_rate_exact_logs():
    # SINRs {1, 3, 7} over three subcarriers -> log2 terms {1, 2, 3}
    noise = dbm_to_watts(-174.0) * (5e6 / 3)
    gains = np.zeros((1, 2, 3))
    gains[0, 1, :] = 1e-12
    scn = make_scenario(user_bs=[1], teleop_bs=[0], pairing=[0],
                        gains_ul=gains, gains_dl=np.full((1, 2, 3), 1e-12))
    ul = UlAllocation.empty(1, 3)
    ul.assign[0, :] = True
    for k, sinr in enumerate((1.0, 3.0, 7.0)):
        ul.power[0, k] = sinr * scn.noise_ul / gains[0, 1, k]
    assert ul_rate(scn, ul, 0) == pytest.approx(6.0, rel=1e-12)


def test_ul_rate_zero_power():
    scn = two_cell()
    ul = UlAllocation.empty(2, 2)
    ul.assign[:, :] = True
    assert ul_rate(scn, ul, 0) == 0.0


def test_dl_rate_single_subcarrier():
    scn = two_cell()
    dl = DlAllocation.empty(2, 2)
    dl.assign[0, 0] = True
    dl.power[0, 0] = 3.0 * scn.noise_dl / scn.channel_dl[0, 1, 0]
    assert dl_rate(scn, dl, 0) == pytest.approx(2.0, rel=1e-12)


def test_dl_rate_matches_bruteforce():
    rng = np.random.default_rng(13)
    scn = generate(default_config(num_sbs=2, users_per_bs=3), 4)
    L = scn.config.num_dl_subcarriers
    dl = DlAllocation.empty(scn.num_teleops, L)
    for o in range(scn.num_teleops):
        l = int(rng.integers(0, L))
        dl.assign[o, l] = True
        dl.power[o, l] = rng.uniform(0, 0.5)
    for o in range(scn.num_teleops):
        j = scn.teleoperators[o].bs_id
        got = dl_rate(scn, dl, o)
        exp = 0.0
        for l in range(L):
            if not dl.assign[o, l]:
                continue
            inter = 0.0
            for t in range(scn.num_teleops):
                if scn.teleoperators[t].bs_id != j and dl.assign[t, l]:
                    inter += dl.power[t, l] * scn.channel_dl[o, scn.teleoperators[t].bs_id, l]
            exp += math.log2(1 + dl.power[o, l] * scn.channel_dl[o, j, l] / (scn.noise_dl + inter))
        assert got == pytest.approx(exp, rel=1e-12)


def test_paired_dl_rate():
    scn = make_scenario(user_bs=[1, 1], teleop_bs=[0, 0], pairing=[1, -1],
                        gains_ul=np.full((2, 2, 1), 1e-12),
                        gains_dl=np.full((2, 2, 1), 1e-12), users_per_bs=2)
    dl = DlAllocation.empty(2, 1)
    dl.assign[1, 0] = True
    dl.power[1, 0] = 3.0 * scn.noise_dl / scn.channel_dl[1, 0, 0]
    assert paired_dl_rate(scn, dl, 0) == pytest.approx(2.0, rel=1e-12)  # user 0 -> teleop 1
    assert paired_dl_rate(scn, dl, 1) == 0.0                            # unpaired user


def test_rate_monotone_in_own_power():
    scn = generate(default_config(num_sbs=2, users_per_bs=2), 3)
    rng = np.random.default_rng(5)
    K = scn.config.num_ul_subcarriers
    ul = UlAllocation.empty(scn.num_users, K)
    for u in range(scn.num_users):
        ul.assign[u, int(rng.integers(0, K))] = True
    ul.power[ul.assign] = rng.uniform(0.001, 0.1, int(ul.assign.sum()))
    for u in range(scn.num_users):
        base = ul_rate(scn, ul, u)
        k = int(np.argmax(ul.assign[u]))
        ul2 = UlAllocation(ul.assign.copy(), ul.power.copy())
        ul2.power[u, k] *= 2.0
        assert ul_rate(scn, ul2, u) >= base
        # and the no-interference rate dominates
        quiet = UlAllocation(ul.assign.copy(), ul.power.copy())
        for v in range(scn.num_users):
            if v != u:
                quiet.power[v, :] = 0.0
        assert ul_rate(scn, quiet, u) >= base


def test_interference_monotone_in_other_power():
    scn = generate(default_config(num_sbs=2, users_per_bs=2), 8)
    K = scn.config.num_ul_subcarriers
    ul = UlAllocation.empty(scn.num_users, K)
    ul.assign[:, 0] = True
    ul.power[:, 0] = 0.01
    u = 0
    base = ul_interference(scn, ul, u, 0)
    other = next(v for v in range(scn.num_users)
                 if scn.users[v].bs_id != scn.users[u].bs_id)
    ul.power[other, 0] *= 3
    assert ul_interference(scn, ul, u, 0) >= base


def test_check_radio_constraints_all_pass():
    scn = two_cell()
    rep = check_radio_constraints(scn, UlAllocation.empty(2, 2), DlAllocation.empty(2, 2))
    assert rep.passed
    assert set(rep.checks) == {"C1", "C2", "C3", "C4"}


def test_check_radio_constraints_power_budget_residual():
    scn = two_cell()
    ul = UlAllocation.empty(2, 2)
    ul.assign[0, :] = True
    cap = dbm_to_watts(scn.config.max_power_user)
    ul.power[0, 0] = cap + 0.1
    rep = check_radio_constraints(scn, ul, DlAllocation.empty(2, 2))
    assert not rep["C3"].passed
    assert rep["C3"].worst_residual == pytest.approx(0.1, rel=1e-9)


def test_check_radio_constraints_exclusivity():
    scn = make_scenario(user_bs=[1, 1], teleop_bs=[1, 1], pairing=[0, 1],
                        gains_ul=np.full((2, 2, 2), 1e-12),
                        gains_dl=np.full((2, 2, 2), 1e-12), users_per_bs=2)
    ul = UlAllocation.empty(2, 2)
    ul.assign[0, 0] = True
    ul.assign[1, 0] = True                      # same BS, same subcarrier
    rep = check_radio_constraints(scn, ul, DlAllocation.empty(2, 2))
    assert not rep["C1"].passed
    assert rep["C1"].violations[0][0] == (1, 0)
