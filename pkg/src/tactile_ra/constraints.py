"""Independent full-constraint checker (C1-C12).

Audits a finished allocation from raw fields only, using the per-entity
reference formulas in `radio` and plain loops.  It shares no code with the
solver's internal feasibility machinery, so the solver's "feasible" label
can be validated against it.
"""
from __future__ import annotations

import math

from .radio import (BINARY_TOL, ConstraintCheck, ConstraintReport, collect_residuals,
                    dl_rate_bps, paired_dl_rate_bps, ul_rate_bps)
from .scenario import Scenario


def check_allocation(scn: Scenario, alloc, rel_tol: float = 1e-6) -> ConstraintReport:
    """Verify C1-C12 for an Allocation-like object (ul, dl, nfv, delays)."""
    cfg = scn.config
    ul, dl, schedule, delays = alloc.ul, alloc.dl, alloc.nfv, alloc.delays
    checks = {}

    # C1/C2: per-(BS, subcarrier) exclusivity
    res = []
    for j in range(scn.num_bs):
        users = scn.users_at(j)
        for k in range(cfg.num_ul_subcarriers):
            res.append(((j, k), sum(int(ul.assign[u, k]) for u in users) - 1.0))
    checks["C1"] = collect_residuals("C1", res, BINARY_TOL)
    res = []
    for j in range(scn.num_bs):
        teleops = scn.teleops_at(j)
        for l in range(cfg.num_dl_subcarriers):
            res.append(((j, l), sum(int(dl.assign[o, l]) for o in teleops) - 1.0))
    checks["C2"] = collect_residuals("C2", res, BINARY_TOL)

    # C3/C4: power budgets (relative slack on the budget)
    res = []
    for u in range(scn.num_users):
        cap = scn.max_power_user_w(u)
        res.append((u, (float(ul.power[u].sum()) - cap) / cap))
    checks["C3"] = collect_residuals("C3", res, rel_tol)
    res = []
    for j in range(scn.num_bs):
        cap = scn.max_power_bs_w(j)
        tot = sum(float(dl.power[o].sum()) for o in scn.teleops_at(j))
        res.append((j, (tot - cap) / cap))
    checks["C4"] = collect_residuals("C4", res, rel_tol)

    # rates once, via the reference formulas
    r_ul = [ul_rate_bps(scn, ul, u) for u in range(scn.num_users)]
    r_dl_user = [paired_dl_rate_bps(scn, dl, u) for u in range(scn.num_users)]

    # C5: each NF placed at most once; every chain fully placed
    res = []
    placed = {}
    if schedule is not None:
        for e in schedule.entries:
            placed[(e.user, e.nf)] = placed.get((e.user, e.nf), 0) + 1
    for (u, f), count in placed.items():
        res.append(((u, f), float(count - 1)))
    for u in range(scn.num_users):
        for f in range(len(scn.service_of(u).chain)):
            if (u, f) not in placed:
                res.append(((u, f), math.inf))     # unplaced NF
    checks["C5"] = collect_residuals("C5", res, BINARY_TOL)

    # C6: five-component sum within the cap
    res = []
    for u in range(scn.num_users):
        b = delays[u]
        res.append((u, (b.total - b.cap) / b.cap))
    checks["C6"] = collect_residuals("C6", res, rel_tol)

    # C7/C8: transmission-delay floors  t >= C / r
    res7, res8 = [], []
    for u in range(scn.num_users):
        b = delays[u]
        c = scn.service_of(u).payload_bits
        need = c / r_ul[u] if r_ul[u] > 0 else math.inf
        res7.append((u, (need - b.t_ul) / b.cap))
        if scn.paired_teleop(u) >= 0:
            need = c / r_dl_user[u] if r_dl_user[u] > 0 else math.inf
            res8.append((u, (need - b.t_dl) / b.cap))
    checks["C7"] = collect_residuals("C7", res7, rel_tol)
    checks["C8"] = collect_residuals("C8", res8, rel_tol)

    # C9: end-time recurrence (chain + same-server predecessors) and C10
    res9, res10 = [], []
    if schedule is not None and placed:
        for e, prev, origin in schedule.predecessor_pairs():
            svc = scn.service_of(e.user)
            beta = svc.chain[e.nf].processing_coefficient_per_bs[e.bs]
            proc = beta * svc.payload_bits / float(scn.processing[e.bs])
            trans = 0.0 if origin == e.bs else svc.payload_bits / float(scn.backhaul[origin, e.bs])
            prev_end = prev.end if prev is not None else 0.0
            lhs = prev_end + trans + proc        # trans is 0 for server pairs
            res9.append(((e.user, e.nf, e.bs), lhs - e.end))
        for u in range(scn.num_users):
            last = len(scn.service_of(u).chain) - 1
            if (u, last) in placed:
                res10.append((u, schedule.end_time(u, last) - delays[u].nfs))
    checks["C9"] = collect_residuals("C9", res9, 1e-9)
    checks["C10"] = collect_residuals("C10", res10, 1e-9)

    # C11/C12: queuing-delay rate floors (formulas inlined on purpose)
    res11, res12 = [], []
    for u in range(scn.num_users):
        b = delays[u]
        need = math.log(1.0 / cfg.violation_prob_ul) / (math.expm1(cfg.qos_exponent_ul) * b.q_ul) \
            if b.q_ul > 0 else math.inf
        res11.append((u, (need - r_ul[u]) / max(need, 1e-300)))
        if scn.paired_teleop(u) >= 0:
            need = math.log(1.0 / cfg.violation_prob_dl) / (math.expm1(cfg.qos_exponent_dl) * b.q_dl) \
                if b.q_dl > 0 else math.inf
            res12.append((u, (need - r_dl_user[u]) / max(need, 1e-300)))
    checks["C11"] = collect_residuals("C11", res11, rel_tol)
    checks["C12"] = collect_residuals("C12", res12, rel_tol)

    return ConstraintReport(checks)


def server_overlaps(schedule) -> list:
    """Pairs of entries that overlap on the same BS server (should be none)."""
    bad = []
    if schedule is None:
        return bad
    by_bs = {}
    for e in schedule.entries:
        by_bs.setdefault(e.bs, []).append(e)
    for j, ents in by_bs.items():
        ents.sort(key=lambda e: (e.start, e.end))
        for a, b in zip(ents, ents[1:]):
            if b.start < a.end - 1e-12:
                bad.append((a, b))
    return bad
