"""Physical-layer quantities: SINR, rates, inter-cell interference, C1-C4.

Rates are spectral (bit/s/Hz summed over assigned subcarriers); multiply by
the per-subcarrier bandwidth wherever bit/s is needed.  All functions are
pure over immutable inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario

BINARY_TOL = 1e-9      # exclusivity / pairing checks
POWER_TOL = 1e-6       # W, power-budget checks


@dataclass(frozen=True, eq=False)
class UlAllocation:
    """UL subcarrier map x and substituted powers (p_dot = x * p), (U, K)."""
    assign: np.ndarray   # bool
    power: np.ndarray    # W

    @staticmethod
    def empty(num_users: int, num_subcarriers: int) -> "UlAllocation":
        return UlAllocation(np.zeros((num_users, num_subcarriers), dtype=bool),
                            np.zeros((num_users, num_subcarriers)))


@dataclass(frozen=True, eq=False)
class DlAllocation:
    """DL subcarrier map tau and powers (p_ddot), (O, L)."""
    assign: np.ndarray
    power: np.ndarray

    @staticmethod
    def empty(num_teleops: int, num_subcarriers: int) -> "DlAllocation":
        return DlAllocation(np.zeros((num_teleops, num_subcarriers), dtype=bool),
                            np.zeros((num_teleops, num_subcarriers)))


# ---------------------------------------------------------------------------
# interference and rates

def ul_interference(scn: Scenario, ul: UlAllocation, u: int, k: int) -> float:
    """Inter-cell interference at user u's serving BS on subcarrier k (W)."""
    j = scn.users[u].bs_id
    total = 0.0
    for v in scn.users:
        if v.bs_id == j:
            continue
        if ul.assign[v.user_id, k]:
            total += ul.power[v.user_id, k] * scn.channel_ul[v.user_id, j, k]
    return total


def ul_sinr(scn: Scenario, ul: UlAllocation, u: int, k: int) -> float:
    j = scn.users[u].bs_id
    num = ul.power[u, k] * scn.channel_ul[u, j, k]
    return num / (scn.noise_ul + ul_interference(scn, ul, u, k))


def ul_rate(scn: Scenario, ul: UlAllocation, u: int) -> float:
    """Achievable UL rate of user u in bit/s/Hz over assigned subcarriers."""
    rate = 0.0
    for k in range(scn.config.num_ul_subcarriers):
        if ul.assign[u, k]:
            rate += math.log2(1.0 + ul_sinr(scn, ul, u, k))
    return rate


def ul_rate_bps(scn: Scenario, ul: UlAllocation, u: int) -> float:
    return ul_rate(scn, ul, u) * scn.subcarrier_bw_ul


def dl_interference(scn: Scenario, dl: DlAllocation, o: int, l: int) -> float:
    """Interference at teleoperator o from other BSs' DL transmissions (W)."""
    j = scn.teleoperators[o].bs_id
    total = 0.0
    for t in scn.teleoperators:
        if t.bs_id == j:
            continue
        if dl.assign[t.teleop_id, l]:
            total += dl.power[t.teleop_id, l] * scn.channel_dl[o, t.bs_id, l]
    return total


def dl_sinr(scn: Scenario, dl: DlAllocation, o: int, l: int) -> float:
    j = scn.teleoperators[o].bs_id
    num = dl.power[o, l] * scn.channel_dl[o, j, l]
    return num / (scn.noise_dl + dl_interference(scn, dl, o, l))


def dl_rate(scn: Scenario, dl: DlAllocation, o: int) -> float:
    """Achievable DL rate of teleoperator o in bit/s/Hz."""
    rate = 0.0
    for l in range(scn.config.num_dl_subcarriers):
        if dl.assign[o, l]:
            rate += math.log2(1.0 + dl_sinr(scn, dl, o, l))
    return rate


def dl_rate_bps(scn: Scenario, dl: DlAllocation, o: int) -> float:
    return dl_rate(scn, dl, o) * scn.subcarrier_bw_dl


def paired_dl_rate(scn: Scenario, dl: DlAllocation, u: int) -> float:
    """DL rate (bit/s/Hz) of user u's paired teleoperator; 0 if unpaired."""
    o = scn.paired_teleop(u)
    if o < 0:
        return 0.0
    return dl_rate(scn, dl, o)


def paired_dl_rate_bps(scn: Scenario, dl: DlAllocation, u: int) -> float:
    return paired_dl_rate(scn, dl, u) * scn.subcarrier_bw_dl


# ---------------------------------------------------------------------------
# constraint report

@dataclass
class ConstraintCheck:
    name: str
    passed: bool
    worst_residual: float                 # positive = violation magnitude
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "worst_residual": self.worst_residual,
                "violations": [list(v) for v in self.violations]}


@dataclass
class ConstraintReport:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed_names(self) -> list[str]:
        return [n for n, c in self.checks.items() if not c.passed]

    def to_dict(self) -> dict:
        return {n: c.to_dict() for n, c in self.checks.items()}

    def __getitem__(self, name: str) -> ConstraintCheck:
        return self.checks[name]


def collect_residuals(name: str, residuals, tol: float) -> ConstraintCheck:
    """residuals: iterable of (entity, lhs - rhs); violation when > tol."""
    worst = -math.inf
    bad = []
    for ent, res in residuals:
        worst = max(worst, res)
        if res > tol:
            bad.append((ent, res))
    if worst == -math.inf:
        worst = 0.0
    return ConstraintCheck(name, not bad, worst, bad)


def check_radio_constraints(scn: Scenario, ul: UlAllocation,
                            dl: DlAllocation) -> ConstraintReport:
    """C1/C2 subcarrier exclusivity and C3/C4 power budgets."""
    cfg = scn.config
    c1 = []
    for j in range(scn.num_bs):
        users = scn.users_at(j)
        for k in range(cfg.num_ul_subcarriers):
            load = sum(int(ul.assign[u, k]) for u in users)
            c1.append(((j, k), load - 1.0))
    c2 = []
    for j in range(scn.num_bs):
        teleops = scn.teleops_at(j)
        for l in range(cfg.num_dl_subcarriers):
            load = sum(int(dl.assign[o, l]) for o in teleops)
            c2.append(((j, l), load - 1.0))
    c3 = []
    for u in range(scn.num_users):
        c3.append((u, float(ul.power[u].sum()) - scn.max_power_user_w(u)))
    c4 = []
    for j in range(scn.num_bs):
        tot = sum(float(dl.power[o].sum()) for o in scn.teleops_at(j))
        c4.append((j, tot - scn.max_power_bs_w(j)))

    checks = {
        "C1": collect_residuals("C1", c1, BINARY_TOL),
        "C2": collect_residuals("C2", c2, BINARY_TOL),
        "C3": collect_residuals("C3", c3, POWER_TOL),
        "C4": collect_residuals("C4", c4, POWER_TOL),
    }
    return ConstraintReport(checks)
