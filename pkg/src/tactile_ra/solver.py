"""Joint radio + NFV resource allocation solver.

Alternates four phases per outer iteration: (1) deadline-priority subcarrier
assignment, (2) minimum-power SCA under the rate floors implied by the
current delay split, (3) whole-chain VNF placement/scheduling, (4) closed
form delay re-adjustment.  Stops when both power vectors move less
than eps_threshold in Euclidean norm, or after max_outer_iters.

The separate baseline ("sa") pins the NF-execution delay component to a
fixed carve-out, solves the radio part alone, then schedules VNFs against
the carve-out.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import qos
from .nfv import NfvSchedule, exec_cost, schedule_heuristic
from .power import PowerProblem, SCAResult, group_rates, sca_power_allocation
from .radio import DlAllocation, UlAllocation
from .scenario import Scenario


@dataclass(frozen=True)
class SolverSettings:
    eps_threshold: float = 1e-4        # W, outer power-change threshold
    max_outer_iters: int = 100
    sca_max_iters: int = 30
    sca_tolerance: float = 1e-9
    initial_power_policy: str = "half-budget"

    def validate(self) -> list[str]:
        errs = []
        if self.eps_threshold <= 0 or self.sca_tolerance <= 0:
            errs.append("tolerances must be positive")
        if self.max_outer_iters < 1 or self.sca_max_iters < 1:
            errs.append("iteration caps must be >= 1")
        return errs


@dataclass(eq=False)
class Allocation:
    ul: UlAllocation
    dl: DlAllocation
    nfv: NfvSchedule | None
    delays: tuple                       # DelayBudget per user
    feasible: bool = False
    violations: list = field(default_factory=list)


@dataclass(eq=False)
class RunResult:
    cost: float
    power_cost: float                   # rho1 * total power (W)
    exec_cost: float                    # rho2 * execution time (ms)
    feasible: bool
    outer_iterations: int
    cost_trace: list = field(default_factory=list)
    sca_traces: list = field(default_factory=list)   # (iter, side, trace)
    counters: dict = field(default_factory=dict)
    wall_ms: float = 0.0
    allocation: Allocation | None = None
    infeasible_reason: str = ""
    constraint_report: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "cost": self.cost, "power_cost": self.power_cost,
            "exec_cost": self.exec_cost, "feasible": self.feasible,
            "outer_iterations": self.outer_iterations,
            "cost_trace": self.cost_trace,
            "sca_traces": [[z, side, list(tr)] for z, side, tr in self.sca_traces],
            "counters": dict(self.counters), "wall_ms": self.wall_ms,
            "infeasible_reason": self.infeasible_reason,
        }
        if self.constraint_report is not None:
            doc["constraint_report"] = self.constraint_report
        if self.allocation is not None:
            a = self.allocation
            doc["allocation"] = {
                "ul": _alloc_rows(a.ul),
                "dl": _alloc_rows(a.dl),
                "schedule": a.nfv.to_rows() if a.nfv is not None else [],
                "delays": [[b.t_ul, b.t_dl, b.q_ul, b.q_dl, b.nfs, b.cap]
                           for b in a.delays],
                "violations": list(a.violations),
            }
        return doc


def _alloc_rows(block) -> list:
    rows = []
    idx = np.argwhere(block.assign)
    for e, k in idx:
        rows.append([int(e), int(k), float(block.power[e, k])])
    return rows


def total_cost(scn: Scenario, alloc: Allocation) -> float:
    """rho1 * (sum UL + DL powers in W) + rho2 * (NF execution time in ms)."""
    cfg = scn.config
    pw = float(alloc.ul.power.sum()) + float(alloc.dl.power.sum())
    ex_ms = 1e3 * exec_cost(alloc.nfv, scn) if alloc.nfv is not None else 0.0
    return cfg.cost_weight_power * pw + cfg.cost_weight_exec * ex_ms


# ---------------------------------------------------------------------------
# internal vectorised rate evaluation (kept separate from the per-user
# reference formulas in radio.py on purpose)

def _rates_ul_bps(scn: Scenario, assign: np.ndarray, power: np.ndarray) -> np.ndarray:
    tx = np.where(assign, power, 0.0)
    h = scn.channel_ul
    bs_of = np.array([u.bs_id for u in scn.users])
    recv = np.einsum("vk,vjk->jk", tx, h)                # total at each BS
    same = np.zeros_like(recv)
    for j in range(scn.num_bs):
        sel = bs_of == j
        if sel.any():
            same[j] = np.einsum("vk,vk->k", tx[sel], h[sel, j, :])
    rates = np.zeros(scn.num_users)
    for u in range(scn.num_users):
        j = bs_of[u]
        inter = recv[j] - same[j]
        sinr = tx[u] * h[u, j, :] / (scn.noise_ul + inter)
        rates[u] = np.sum(np.log2(1.0 + sinr[assign[u]]))
    return rates * scn.subcarrier_bw_ul


def _rates_dl_bps(scn: Scenario, assign: np.ndarray, power: np.ndarray) -> np.ndarray:
    tx = np.where(assign, power, 0.0)
    hh = scn.channel_dl
    bs_of = np.array([o.bs_id for o in scn.teleoperators])
    per_bs_tx = np.zeros((scn.num_bs, scn.config.num_dl_subcarriers))
    for j in range(scn.num_bs):
        sel = bs_of == j
        if sel.any():
            per_bs_tx[j] = tx[sel].sum(axis=0)
    rates = np.zeros(scn.num_teleops)
    for o in range(scn.num_teleops):
        j = bs_of[o]
        inter = np.einsum("jl,jl->l", per_bs_tx, hh[o]) - per_bs_tx[j] * hh[o, j, :]
        sinr = tx[o] * hh[o, j, :] / (scn.noise_dl + inter)
        rates[o] = np.sum(np.log2(1.0 + sinr[assign[o]]))
    return rates * scn.subcarrier_bw_dl


# ---------------------------------------------------------------------------
# delay machinery

def _queue_const(delta: float, theta: float) -> float:
    # ln(1/delta) / (e^theta - 1): bits such that q_min = const / rate
    return math.log(1.0 / delta) / math.expm1(theta)


def delay_component_bounds(scn: Scenario, u: int, r_ul_bps: float,
                           r_dl_bps: float, nfs: float) -> tuple:
    """Per-component lower bounds (t_ul, t_dl, q_ul, q_dl, nfs) implied by
    fixed rates and a fixed NF-execution delay (inf when unattainable)."""
    cfg = scn.config
    svc = scn.service_of(u)
    c = svc.payload_bits
    t_ul = c / r_ul_bps if r_ul_bps > 0 else math.inf
    q_ul = _queue_const(cfg.violation_prob_ul, cfg.qos_exponent_ul) / r_ul_bps \
        if r_ul_bps > 0 else math.inf
    if scn.paired_teleop(u) >= 0:
        t_dl = c / r_dl_bps if r_dl_bps > 0 else math.inf
        q_dl = _queue_const(cfg.violation_prob_dl, cfg.qos_exponent_dl) / r_dl_bps \
            if r_dl_bps > 0 else math.inf
    else:
        t_dl = q_dl = 0.0                      # no paired teleoperator: no DL leg
    return t_ul, t_dl, q_ul, q_dl, nfs


def adjust_delays(scn: Scenario, rates_ul_bps, rates_dl_bps, nfs_delays):
    """Closed-form delay adjustment: every component at its lower bound,
    feasibility = bounds sum <= cap, remaining slack split over the two
    queuing components proportionally to their bounds.

    Returns (budgets, violations); budgets[u] is None for infeasible users,
    violations holds (user, dominant_component, excess)."""
    budgets = []
    violations = []
    comp_names = ("t_ul", "t_dl", "q_ul", "q_dl", "nfs")
    for u in range(scn.num_users):
        cap = scn.service_of(u).e2e_delay_max
        b = delay_component_bounds(scn, u, float(rates_ul_bps[u]),
                                   float(rates_dl_bps[u]), float(nfs_delays[u]))
        total = sum(b)
        if total > cap:
            dom = comp_names[int(np.argmax(b))]
            violations.append((u, dom, total - cap))
            budgets.append(None)
            continue
        slack = cap - total
        t_ul, t_dl, q_ul, q_dl, nfs = b
        qsum = q_ul + q_dl
        if qsum > 0:
            q_ul += slack * q_ul / qsum
            q_dl += slack * q_dl / qsum
        else:
            q_ul += 0.5 * slack
            q_dl += 0.5 * slack
        budgets.append(qos.DelayBudget(t_ul, t_dl, q_ul, q_dl, nfs, cap))
    return budgets, violations


def initial_delay_budgets(scn: Scenario, nfs_delays) -> list:
    """Starting delay split: NF delay as given; the radio remainder is halved
    between UL and DL, and each half split between transmission and queuing
    so both imply the same rate floor."""
    cfg = scn.config
    out = []
    for u in range(scn.num_users):
        svc = scn.service_of(u)
        cap = svc.e2e_delay_max
        nfs = float(nfs_delays[u])
        remain = max(cap - nfs, 1e-9 * cap)
        paired = scn.paired_teleop(u) >= 0
        r_ul = remain / 2 if paired else remain
        kq1 = _queue_const(cfg.violation_prob_ul, cfg.qos_exponent_ul)
        t_ul = r_ul * svc.payload_bits / (svc.payload_bits + kq1)
        q_ul = r_ul - t_ul
        if paired:
            kq2 = _queue_const(cfg.violation_prob_dl, cfg.qos_exponent_dl)
            r_dl = remain - r_ul
            t_dl = r_dl * svc.payload_bits / (svc.payload_bits + kq2)
            q_dl = r_dl - t_dl
        else:
            t_dl = q_dl = 0.0
        out.append(qos.DelayBudget(t_ul, t_dl, q_ul, q_dl, nfs, cap))
    return out


# ---------------------------------------------------------------------------
# subcarrier allocation (phase 1)

@dataclass
class SubcarrierResult:
    ul_assign: np.ndarray
    dl_assign: np.ndarray
    violators: list = field(default_factory=list)
    retries: int = 0


def _greedy_block(order: list[int], gains, num_sc: int, counters) -> np.ndarray:
    """Round-robin deadline-priority picks: each entity claims its best
    remaining subcarrier until the BS pool is exhausted."""
    assign = np.zeros((gains.shape[0], num_sc), dtype=bool)
    pool = list(range(num_sc))
    while pool and order:
        for e in order:
            if not pool:
                break
            counters["subcarrier_ops"] += len(pool) + 4
            best = max(pool, key=lambda k: (gains[e, k], -k))
            assign[e, best] = True
            pool.remove(best)
    return assign


def allocate_subcarriers(scn: Scenario, user_total_power, teleop_total_power,
                         nfs_delays, counters, max_retries: int | None = None,
                         front_users=frozenset(), front_teleops=frozenset(),
                         check_delays: bool = True) -> SubcarrierResult:
    """Deadline-ascending greedy assignment with exclusivity per BS, then a
    bounded reorder loop for users whose five-component delay bound fails
    at the given (uniformly spread) power totals.

    The delay screen is advisory: it shapes the pick order; the binding
    delay feasibility decision is made later with the optimised powers.
    front_users / front_teleops are entities promoted to the head of their
    BS's order (the reorder remedy, re-triggered by later phases)."""
    cfg = scn.config
    caps = np.array([scn.service_of(u).e2e_delay_max for u in range(scn.num_users)])
    if max_retries is None:
        max_retries = scn.num_users

    # per-BS priority orders
    ul_orders = {}
    for j in range(scn.num_bs):
        ul_orders[j] = sorted(scn.users_at(j),
                              key=lambda u: (u not in front_users, caps[u], j, u))
    dl_orders = {}
    for j in range(scn.num_bs):
        paired = [o for o in scn.teleops_at(j) if scn.paired_user(o) >= 0]
        dl_orders[j] = sorted(paired,
                              key=lambda o: (o not in front_teleops,
                                             caps[scn.paired_user(o)], j, o))

    retries = 0
    while True:
        ul_assign = np.zeros((scn.num_users, cfg.num_ul_subcarriers), dtype=bool)
        for j in range(scn.num_bs):
            if not ul_orders[j]:
                continue
            blk = _greedy_block(ul_orders[j], scn.channel_ul[:, j, :],
                                cfg.num_ul_subcarriers, counters)
            ul_assign |= blk
        dl_assign = np.zeros((scn.num_teleops, cfg.num_dl_subcarriers), dtype=bool)
        for j in range(scn.num_bs):
            if not dl_orders[j]:
                continue
            blk = _greedy_block(dl_orders[j], scn.channel_dl[:, j, :],
                                cfg.num_dl_subcarriers, counters)
            dl_assign |= blk

        violators = []
        if check_delays:
            p_ul = _spread(ul_assign, user_total_power)
            p_dl = _spread(dl_assign, teleop_total_power)
            r_ul = _rates_ul_bps(scn, ul_assign, p_ul)
            r_dl = _rates_dl_bps(scn, dl_assign, p_dl)
            for u in range(scn.num_users):
                o = scn.paired_teleop(u)
                b = delay_component_bounds(scn, u, float(r_ul[u]),
                                           float(r_dl[o]) if o >= 0 else 0.0,
                                           float(nfs_delays[u]))
                if sum(b) > caps[u]:
                    violators.append(u)

        if not violators or retries >= max_retries:
            return SubcarrierResult(ul_assign, dl_assign, violators, retries)

        # reorder the first violator past an earlier, satisfied user of the
        # same BS; stop if nobody can trade places
        moved = False
        for u in violators:
            j = scn.users[u].bs_id
            order = ul_orders[j]
            pos = order.index(u)
            for q in range(pos):
                if order[q] not in violators:
                    order[q], order[pos] = order[pos], order[q]
                    moved = True
                    break
            if moved:
                break
        counters["subcarrier_ops"] += scn.num_users
        retries += 1
        if not moved:
            return SubcarrierResult(ul_assign, dl_assign, violators, retries)


def _spread(assign: np.ndarray, totals) -> np.ndarray:
    counts = assign.sum(axis=1)
    out = np.zeros(assign.shape)
    nz = counts > 0
    out[nz] = (np.asarray(totals)[nz] / counts[nz])[:, None]
    return out * assign


# ---------------------------------------------------------------------------
# power allocation (phase 2)

@dataclass
class PowerPhase:
    p_ul: np.ndarray
    p_dl: np.ndarray
    rates_ul_bps: np.ndarray
    rates_dl_bps: np.ndarray
    ul_result: SCAResult
    dl_result: SCAResult

    @property
    def feasible(self) -> bool:
        return self.ul_result.feasible and self.dl_result.feasible

    @property
    def reason(self) -> str:
        parts = []
        if not self.ul_result.feasible:
            parts.append(f"UL rate floor unattainable at max power: {self.ul_result.binding}")
        if not self.dl_result.feasible:
            parts.append(f"DL rate floor unattainable at max power: {self.dl_result.binding}")
        return "; ".join(parts)


def _build_ul_problem(scn: Scenario, assign: np.ndarray, floors_bps) -> tuple:
    links = np.argwhere(assign)
    n = links.shape[0]
    bs_of = np.array([u.bs_id for u in scn.users])
    own = np.empty(n)
    cross = np.zeros((n, n))
    for i, (u, k) in enumerate(links):
        own[i] = scn.channel_ul[u, bs_of[u], k]
    for i, (u, k) in enumerate(links):
        for q, (v, kq) in enumerate(links):
            if kq == k and bs_of[v] != bs_of[u]:
                cross[i, q] = scn.channel_ul[v, bs_of[u], k]
    prob = PowerProblem(
        own_gain=own,
        noise=np.full(n, scn.noise_ul),
        cross_gain=cross,
        floor_group=links[:, 0].astype(int),
        floors=np.asarray(floors_bps) / scn.subcarrier_bw_ul,
        budget_group=links[:, 0].astype(int),
        budgets=np.array([scn.max_power_user_w(u) for u in range(scn.num_users)]),
        group_labels=tuple(f"user {u} (C7/C11)" for u in range(scn.num_users)),
    )
    return prob, links


def _build_dl_problem(scn: Scenario, assign: np.ndarray, floors_bps) -> tuple:
    links = np.argwhere(assign)
    n = links.shape[0]
    bs_of = np.array([o.bs_id for o in scn.teleoperators])
    own = np.empty(n)
    cross = np.zeros((n, n))
    for i, (o, l) in enumerate(links):
        own[i] = scn.channel_dl[o, bs_of[o], l]
    for i, (o, l) in enumerate(links):
        for q, (t, lq) in enumerate(links):
            if lq == l and bs_of[t] != bs_of[o]:
                cross[i, q] = scn.channel_dl[o, bs_of[t], l]
    prob = PowerProblem(
        own_gain=own,
        noise=np.full(n, scn.noise_dl),
        cross_gain=cross,
        floor_group=links[:, 0].astype(int),
        floors=np.asarray(floors_bps) / scn.subcarrier_bw_dl,
        budget_group=bs_of[links[:, 0]].astype(int) if n else np.zeros(0, dtype=int),
        budgets=np.array([scn.max_power_bs_w(j) for j in range(scn.num_bs)]),
        group_labels=tuple(f"teleoperator {o} (C8/C12)" for o in range(scn.num_teleops)),
    )
    return prob, links


def rate_floors_from_budgets(scn: Scenario, budgets) -> tuple[np.ndarray, np.ndarray]:
    """Per-user UL floor and per-teleoperator DL floor (bit/s) implied by a
    delay split: the binding of C7 vs C11 (resp. C8 vs C12)."""
    cfg = scn.config
    fl_ul = np.zeros(scn.num_users)
    fl_dl = np.zeros(scn.num_teleops)
    kq1 = _queue_const(cfg.violation_prob_ul, cfg.qos_exponent_ul)
    kq2 = _queue_const(cfg.violation_prob_dl, cfg.qos_exponent_dl)
    for u in range(scn.num_users):
        b = budgets[u]
        c = scn.service_of(u).payload_bits
        fl_ul[u] = max(c / b.t_ul if b.t_ul > 0 else math.inf,
                       kq1 / b.q_ul if b.q_ul > 0 else math.inf)
        o = scn.paired_teleop(u)
        if o >= 0:
            fl_dl[o] = max(c / b.t_dl if b.t_dl > 0 else math.inf,
                           kq2 / b.q_dl if b.q_dl > 0 else math.inf)
    return fl_ul, fl_dl


def allocate_power_sca(scn: Scenario, ul_assign: np.ndarray, dl_assign: np.ndarray,
                       budgets, settings: SolverSettings,
                       warm_ul: np.ndarray | None = None,
                       warm_dl: np.ndarray | None = None) -> PowerPhase:
    """Solve the two decoupled min-power SCA blocks (UL and DL)."""
    fl_ul, fl_dl = rate_floors_from_budgets(scn, budgets)
    prob_u, links_u = _build_ul_problem(scn, ul_assign, fl_ul)
    prob_d, links_d = _build_dl_problem(scn, dl_assign, fl_dl)

    w_u = w_d = None
    if warm_ul is not None and links_u.size:
        w_u = warm_ul[links_u[:, 0], links_u[:, 1]]
    if warm_dl is not None and links_d.size:
        w_d = warm_dl[links_d[:, 0], links_d[:, 1]]

    res_u = sca_power_allocation(prob_u, settings.sca_max_iters,
                                 settings.sca_tolerance, warm=w_u)
    res_d = sca_power_allocation(prob_d, settings.sca_max_iters,
                                 settings.sca_tolerance, warm=w_d)

    p_ul = np.zeros_like(ul_assign, dtype=float)
    if links_u.size:
        p_ul[links_u[:, 0], links_u[:, 1]] = res_u.power
    p_dl = np.zeros_like(dl_assign, dtype=float)
    if links_d.size:
        p_dl[links_d[:, 0], links_d[:, 1]] = res_d.power

    r_ul = group_rates(prob_u, res_u.power) * scn.subcarrier_bw_ul \
        if links_u.size else np.zeros(scn.num_users)
    r_dl = group_rates(prob_d, res_d.power) * scn.subcarrier_bw_dl \
        if links_d.size else np.zeros(scn.num_teleops)
    return PowerPhase(p_ul, p_dl, r_ul, r_dl, res_u, res_d)


# ---------------------------------------------------------------------------
# outer loop

def solve_joint(scn: Scenario, settings: SolverSettings | None = None) -> RunResult:
    return _solve(scn, settings or SolverSettings(), sa_carve=None)


def solve_separate(scn: Scenario, settings: SolverSettings | None = None,
                   fixed_nfv_delay: float = 0.5e-3) -> RunResult:
    """Radio and NFV solved independently: the radio stage sees a fixed NF
    delay carve-out; the NFV stage must fit every makespan inside it."""
    settings = settings or SolverSettings()
    min_cap = min(s.e2e_delay_max for s in scn.config.services)
    if not (0.0 < fixed_nfv_delay < min_cap):
        return RunResult(cost=math.inf, power_cost=0.0, exec_cost=0.0,
                         feasible=False, outer_iterations=0,
                         infeasible_reason="fixed NFV carve-out must lie in "
                                           f"(0, {min_cap}); got {fixed_nfv_delay}")
    return _solve(scn, settings, sa_carve=fixed_nfv_delay)


def _solve(scn: Scenario, settings: SolverSettings, sa_carve: float | None) -> RunResult:
    errs = settings.validate()
    if errs:
        raise ValueError("; ".join(errs))
    t0 = time.perf_counter()
    cfg = scn.config
    nU, nO = scn.num_users, scn.num_teleops
    counters = {"subcarrier_ops": 0, "sca_iterations": 0,
                "nfv_ops": 0, "delay_constraints": 0}
    caps = np.array([scn.service_of(u).e2e_delay_max for u in range(nU)])

    # initial NFV estimate (joint mode) or pinned carve-out (separate mode)
    if sa_carve is None:
        outcome = schedule_heuristic(scn, deadlines=caps)
        counters["nfv_ops"] += outcome.ops
        nfs = np.array([outcome.schedule.makespan(u) for u in range(nU)])
        schedule = outcome.schedule
        nfv_ok = outcome.feasible
    else:
        schedule = None
        nfs = np.full(nU, sa_carve)
        nfv_ok = True

    budgets = initial_delay_budgets(scn, nfs)
    user_tot = np.array([0.5 * scn.max_power_user_w(u) for u in range(nU)])
    teleop_tot = np.zeros(nO)
    for j in range(scn.num_bs):
        active = [o for o in scn.teleops_at(j) if scn.paired_user(o) >= 0]
        if active:
            teleop_tot[active] = 0.5 * scn.max_power_bs_w(j) / len(active)

    prev_ul = prev_dl = None
    prev_assign = None
    best = None
    cost_trace = []
    sca_traces = []
    adjust_retry_used = False
    power_retries = 0
    front_users: set = set()
    front_teleops: set = set()
    infeasible_reason = ""
    z = 0

    first_alloc = True
    while z < settings.max_outer_iters:
        z += 1
        sub = allocate_subcarriers(scn, user_tot, teleop_tot, nfs, counters,
                                   front_users=front_users,
                                   front_teleops=front_teleops,
                                   check_delays=first_alloc)
        first_alloc = False

        warm_u = prev_ul if prev_assign is not None and \
            np.array_equal(prev_assign[0], sub.ul_assign) else None
        warm_d = prev_dl if prev_assign is not None and \
            np.array_equal(prev_assign[1], sub.dl_assign) else None
        phase = allocate_power_sca(scn, sub.ul_assign, sub.dl_assign, budgets,
                                   settings, warm_u, warm_d)
        counters["sca_iterations"] += phase.ul_result.iterations + phase.dl_result.iterations
        sca_traces.append((z, "ul", phase.ul_result.objective_trace))
        sca_traces.append((z, "dl", phase.dl_result.objective_trace))

        if not phase.feasible:
            # promote the binding entity in its BS pick order and retry the
            # subcarrier phase (bounded)
            grew = False
            if not phase.ul_result.feasible and phase.ul_result.binding_group >= 0:
                u = phase.ul_result.binding_group
                grew |= u not in front_users
                front_users.add(u)
            if not phase.dl_result.feasible and phase.dl_result.binding_group >= 0:
                o = phase.dl_result.binding_group
                grew |= o not in front_teleops
                front_teleops.add(o)
            if grew and power_retries < 4:
                power_retries += 1
                prev_assign = None
                continue
            infeasible_reason = phase.reason
            break

        r_dl_user = np.array([phase.rates_dl_bps[scn.paired_teleop(u)]
                              if scn.paired_teleop(u) >= 0 else 0.0 for u in range(nU)])

        if sa_carve is None:
            # NFV deadlines = slack left by the radio components (C6 form)
            radio_min = np.empty(nU)
            for u in range(nU):
                b = delay_component_bounds(scn, u, float(phase.rates_ul_bps[u]),
                                           float(r_dl_user[u]), 0.0)
                radio_min[u] = sum(b)
            outcome = schedule_heuristic(scn, deadlines=caps - radio_min,
                                         sort_keys=caps)
            counters["nfv_ops"] += outcome.ops
            schedule = outcome.schedule
            nfv_ok = outcome.feasible
            nfs = np.array([schedule.makespan(u) for u in range(nU)])

        new_budgets, violations = adjust_delays(scn, phase.rates_ul_bps,
                                                r_dl_user, nfs)
        counters["delay_constraints"] += 6 * nU

        if violations:
            if not adjust_retry_used:
                # keep previous budgets for the violators, retry once with the
                # subcarrier reordering re-triggered
                adjust_retry_used = True
                for u, _, _ in violations:
                    new_budgets[u] = budgets[u]
                budgets = new_budgets
                continue
            u, dom, excess = violations[0]
            infeasible_reason = (f"delay adjustment infeasible for user {u}: "
                                 f"component {dom} exceeds budget by {excess:.3e}s")
            break
        budgets = new_budgets

        ul = UlAllocation(sub.ul_assign.copy(), phase.p_ul)
        dl = DlAllocation(sub.dl_assign.copy(), phase.p_dl)
        alloc = Allocation(ul, dl, schedule, tuple(budgets))
        iter_ok = nfv_ok
        alloc.feasible = iter_ok
        if not nfv_ok:
            alloc.violations.append("NFV scheduling deadline violated")
        cost = total_cost(scn, alloc)
        cost_trace.append(cost)
        if iter_ok and (best is None or cost < best[0]):
            best = (cost, alloc)

        if prev_ul is not None:
            d_ul = float(np.linalg.norm(phase.p_ul - prev_ul))
            d_dl = float(np.linalg.norm(phase.p_dl - prev_dl))
            if d_ul <= settings.eps_threshold and d_dl <= settings.eps_threshold:
                prev_ul, prev_dl = phase.p_ul, phase.p_dl
                break
        prev_ul, prev_dl = phase.p_ul, phase.p_dl
        prev_assign = (sub.ul_assign, sub.dl_assign)
        user_tot = phase.p_ul.sum(axis=1)
        teleop_tot = phase.p_dl.sum(axis=1)

    if best is None:
        if not infeasible_reason:
            infeasible_reason = "no feasible allocation found in any iteration"
        return RunResult(cost=math.inf, power_cost=0.0, exec_cost=0.0,
                         feasible=False, outer_iterations=z,
                         cost_trace=cost_trace, sca_traces=sca_traces,
                         counters=counters,
                         wall_ms=1e3 * (time.perf_counter() - t0),
                         infeasible_reason=infeasible_reason)

    cost, alloc = best
    feasible = True
    if sa_carve is not None:
        # NFV stage of the separate approach: every makespan must fit the
        # carve-out (the C10 form of the deadline check)
        outcome = schedule_heuristic(scn, deadlines=np.full(nU, sa_carve),
                                     sort_keys=caps)
        counters["nfv_ops"] += outcome.ops
        alloc.nfv = outcome.schedule
        if not outcome.feasible:
            feasible = False
            alloc.feasible = False
            alloc.violations.append(
                f"NFV makespan exceeds carve-out for users {outcome.violating_users}")
            infeasible_reason = ("NFV stage exceeds its carve-out for users "
                                 f"{outcome.violating_users}")
        cost = total_cost(scn, alloc)

    pw = float(alloc.ul.power.sum() + alloc.dl.power.sum())
    ex_ms = 1e3 * exec_cost(alloc.nfv, scn) if alloc.nfv is not None else 0.0
    wall_ms = 1e3 * (time.perf_counter() - t0)
    return RunResult(cost=cost,
                     power_cost=cfg.cost_weight_power * pw,
                     exec_cost=cfg.cost_weight_exec * ex_ms,
                     feasible=feasible, outer_iterations=z,
                     cost_trace=cost_trace, sca_traces=sca_traces,
                     counters=counters, wall_ms=wall_ms, allocation=alloc,
                     infeasible_reason=infeasible_reason)
