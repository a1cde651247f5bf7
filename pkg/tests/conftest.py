"""Shared builders: hand-made scenarios with controlled gains."""
import numpy as np
import pytest

from tactile_ra.scenario import (NfSpec, Scenario, ScenarioConfig, ServiceSpec,
                                 Teleoperator, User, default_config)


def make_config(num_sbs=1, users_per_bs=1, K=1, L=1, e2e_delay_ms=1.0,
                chain=((1.0,),), payload=1000.0, **over) -> ScenarioConfig:
    """Small hand-tuned config; `chain` is a tuple of per-BS beta tuples."""
    num_bs = num_sbs + 1
    nfs = []
    for f, betas in enumerate(chain):
        b = tuple(betas) if len(betas) == num_bs else tuple(betas[0] for _ in range(num_bs))
        nfs.append(NfSpec(f, b))
    svc = ServiceSpec(0, e2e_delay_ms * 1e-3, payload, tuple(nfs))
    base = dict(
        num_sbs=num_sbs, coverage_area=10.0, num_ul_subcarriers=K,
        num_dl_subcarriers=L, ul_bandwidth=5e6, dl_bandwidth=5e6,
        noise_psd=-174.0, pathloss_exponent=3.0, pathloss_ref_gain=1e-13,
        qos_exponent_ul=11.0, qos_exponent_dl=11.0,
        violation_prob_ul=1e-3, violation_prob_dl=1e-3,
        nonempty_buffer_prob_ul=1.0, nonempty_buffer_prob_dl=1.0,
        max_power_mbs=46.0, max_power_sbs=43.0, max_power_user=23.0,
        cost_weight_power=1.0, cost_weight_exec=1.0,
        services=(svc,), users_per_bs_per_service=users_per_bs,
        backhaul_capacity=1e9, processing_rate=1e9, rng_seed=0)
    base.update(over)
    return ScenarioConfig(**base)


def make_scenario(user_bs, teleop_bs, pairing, gains_ul, gains_dl,
                  config=None, **cfg_over) -> Scenario:
    """Direct Scenario with explicit channel gains.

    gains_ul: (U, J+1, K); gains_dl: (O, J+1, L); pairing: user -> teleop
    index or -1.
    """
    gains_ul = np.asarray(gains_ul, dtype=float)
    gains_dl = np.asarray(gains_dl, dtype=float)
    nU, nB, K = gains_ul.shape
    nO, _, L = gains_dl.shape
    if config is None:
        cfg_over.setdefault("users_per_bs", max(1, nU))
        config = make_config(num_sbs=nB - 1, K=K, L=L, **cfg_over)
    pos = np.zeros((nB, 2))
    pos[1:, 0] = np.arange(1, nB)          # 1 km spacing on a line
    users = tuple(User(u, user_bs[u], 0, (pos[user_bs[u]][0], 0.1)) for u in range(nU))
    teleops = tuple(Teleoperator(o, teleop_bs[o], (pos[teleop_bs[o]][0], -0.1))
                    for o in range(nO))
    backhaul = np.full((nB, nB), config.backhaul_capacity)
    np.fill_diagonal(backhaul, 0.0)
    return Scenario(config=config, bs_positions=pos, users=users,
                    teleoperators=teleops, pairing=tuple(pairing),
                    channel_ul=gains_ul, channel_dl=gains_dl,
                    backhaul=backhaul,
                    processing=np.full(nB, config.processing_rate))


def single_link_scenario(h=1e-12, K=1, L=1, e2e_delay_ms=2.0, **cfg_over) -> Scenario:
    """One user at the SBS, its teleoperator at the MBS; no interference."""
    gains_ul = np.zeros((1, 2, K))
    gains_ul[0, 1, :] = h
    gains_dl = np.zeros((1, 2, L))
    gains_dl[0, 0, :] = h
    return make_scenario(user_bs=[1], teleop_bs=[0], pairing=[0],
                         gains_ul=gains_ul, gains_dl=gains_dl,
                         e2e_delay_ms=e2e_delay_ms, **cfg_over)


@pytest.fixture
def table_config():
    return default_config()
