"""Seeded experiment sweeps, result tables, and the exhaustive oracle.

A sweep is a pure function of (spec, base config, seed list); rows are
ordered by (axis position, mode, seed) regardless of worker completion
order.  Wall-clock milliseconds are the one diagnostic column that is not
reproducible across repeats.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import constraints
from .scenario import Scenario, ScenarioConfig, NfSpec, generate
from .nfv import build_schedule, exec_cost
from .solver import (RunResult, SolverSettings, delay_component_bounds,
                     solve_joint, solve_separate)

AXES = ("users_per_bs", "num_subcarriers", "e2e_delay", "num_bs")
TABLE_COLUMNS = ("axis", "mode", "seed", "cost", "power_cost", "exec_cost",
                 "feasible", "iters", "wall_ms")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    mode: str = "ja"                  # ja | sa | both
    seeds: tuple = (0,)
    sa_carve: float = 0.5e-3          # s, NFV carve-out for the separate mode
    workers: int = 1

    @property
    def ensemble_size(self) -> int:
        return len(self.seeds)

    def validate(self) -> list[str]:
        errs = []
        if self.axis not in AXES:
            errs.append(f"axis must be one of {AXES}")
        if not self.values:
            errs.append("values must be non-empty")
        if self.mode not in ("ja", "sa", "both"):
            errs.append("mode must be ja, sa or both")
        if not self.seeds:
            errs.append("seeds must be non-empty")
        return errs


@dataclass(frozen=True)
class ResultRow:
    axis_value: float
    mode: str
    seed: int
    cost: float           # power_cost + exec_cost (partial terms if infeasible)
    power_cost: float
    exec_cost: float
    feasible: bool
    iters: int
    wall_ms: float

    def as_list(self) -> list:
        return [self.axis_value, self.mode, self.seed, self.cost,
                self.power_cost, self.exec_cost, int(self.feasible),
                self.iters, self.wall_ms]


def apply_axis(config: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Base config with one sweep axis changed."""
    if axis == "users_per_bs":
        return replace(config, users_per_bs_per_service=int(value))
    if axis == "num_subcarriers":
        # value is the UL count; the DL pool keeps the base 2:1 ratio
        ratio = config.num_dl_subcarriers / config.num_ul_subcarriers
        return replace(config, num_ul_subcarriers=int(value),
                       num_dl_subcarriers=int(round(value * ratio)))
    if axis == "e2e_delay":
        # value in milliseconds, applied to every service
        services = tuple(replace(s, e2e_delay_max=float(value) * 1e-3)
                         for s in config.services)
        return replace(config, services=services)
    if axis == "num_bs":
        nb = int(value) + 1
        services = []
        for s in config.services:
            chain = tuple(NfSpec(nf.nf_id,
                                 tuple(nf.processing_coefficient_per_bs[n % len(nf.processing_coefficient_per_bs)]
                                       for n in range(nb)))
                          for nf in s.chain)
            services.append(replace(s, chain=chain))
        return replace(config, num_sbs=int(value), services=tuple(services))
    raise ValueError(f"unknown sweep axis: {axis}")


def run_point(config: ScenarioConfig, seed: int, mode: str,
              sa_carve: float = 0.5e-3,
              settings: SolverSettings | None = None) -> RunResult:
    """Generate + solve one sweep point and attach the independent audit."""
    scn = generate(config, seed)
    if mode == "ja":
        result = solve_joint(scn, settings)
    elif mode == "sa":
        result = solve_separate(scn, settings, fixed_nfv_delay=sa_carve)
    else:
        raise ValueError(f"unknown mode: {mode}")
    if result.allocation is not None:
        report = constraints.check_allocation(scn, result.allocation)
        result.constraint_report = report.to_dict()
    return result


def _point_task(args):
    config, seed, mode, sa_carve, settings, axis_value = args
    res = run_point(config, seed, mode, sa_carve, settings)
    return axis_value, mode, seed, res


def run_sweep(spec: SweepSpec, base_config: ScenarioConfig,
              settings: SolverSettings | None = None
              ) -> tuple[list[ResultRow], list[dict]]:
    """All (axis value x mode x seed) points; per-point infeasibility is
    recorded in its row, never aborts the sweep."""
    errs = spec.validate()
    if errs:
        raise ValueError("; ".join(errs))
    modes = ("ja", "sa") if spec.mode == "both" else (spec.mode,)
    tasks = []
    for value in spec.values:
        cfg = apply_axis(base_config, spec.axis, value)
        for mode in modes:
            for seed in spec.seeds:
                tasks.append((cfg, seed, mode, spec.sa_carve, settings, value))

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outputs = list(pool.map(_point_task, tasks))
    else:
        outputs = [_point_task(t) for t in tasks]

    value_pos = {v: i for i, v in enumerate(spec.values)}
    outputs.sort(key=lambda o: (value_pos[o[0]], o[1], o[2]))

    rows, docs = [], []
    for value, mode, seed, res in outputs:
        rows.append(ResultRow(
            axis_value=float(value), mode=mode, seed=seed,
            cost=res.power_cost + res.exec_cost,
            power_cost=res.power_cost, exec_cost=res.exec_cost,
            feasible=res.feasible, iters=res.outer_iterations,
            wall_ms=res.wall_ms))
        doc = res.to_dict()
        doc["axis_value"] = float(value)
        doc["mode"] = mode
        doc["seed"] = seed
        docs.append(doc)
    return rows, docs


# ---------------------------------------------------------------------------
# emission / parsing

def emit(rows: list[ResultRow], fmt: str, path, docs: list[dict] | None = None,
         spec: SweepSpec | None = None) -> None:
    p = Path(path)
    if fmt == "table":
        lines = [",".join(TABLE_COLUMNS)]
        for r in rows:
            lines.append(",".join(repr(x) if isinstance(x, float) else str(x)
                                  for x in r.as_list()))
        p.write_text("\n".join(lines) + "\n")
    elif fmt == "structured":
        doc = {"columns": list(TABLE_COLUMNS),
               "rows": [r.as_list() for r in rows],
               "results": docs if docs is not None else []}
        if spec is not None:
            doc["spec"] = {"axis": spec.axis, "values": list(spec.values),
                           "mode": spec.mode, "seeds": list(spec.seeds),
                           "sa_carve": spec.sa_carve}
        p.write_text(json.dumps(doc, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format: {fmt}")


def parse_table(path) -> list[ResultRow]:
    lines = Path(path).read_text().strip().splitlines()
    if lines[0] != ",".join(TABLE_COLUMNS):
        raise ValueError(f"unexpected table header: {lines[0]}")
    rows = []
    for ln in lines[1:]:
        f = ln.split(",")
        rows.append(ResultRow(float(f[0]), f[1], int(f[2]), float(f[3]),
                              float(f[4]), float(f[5]), bool(int(f[6])),
                              int(f[7]), float(f[8])))
    return rows


def parse_structured(path) -> tuple[list[ResultRow], list[dict]]:
    doc = json.loads(Path(path).read_text())
    rows = [ResultRow(float(r[0]), r[1], int(r[2]), float(r[3]), float(r[4]),
                      float(r[5]), bool(r[6]), int(r[7]), float(r[8]))
            for r in doc["rows"]]
    return rows, doc.get("results", [])


# ---------------------------------------------------------------------------
# exhaustive discrete oracle

@dataclass
class OracleReport:
    oracle_feasible: bool
    oracle_cost: float
    heuristic_feasible: bool
    heuristic_cost: float
    candidates: int
    ratio: float = math.nan

    def to_dict(self) -> dict:
        return {"oracle_feasible": self.oracle_feasible,
                "oracle_cost": self.oracle_cost,
                "heuristic_feasible": self.heuristic_feasible,
                "heuristic_cost": self.heuristic_cost,
                "candidates": self.candidates, "ratio": self.ratio}


def _enum_side(scn: Scenario, side: str, se_ladder) -> list[tuple]:
    """All discrete (assignment, power-level) combos for one direction.

    Returns (total_power, per-user minimal transmission+queuing delay)
    per candidate; exact rates including cross-cell interference.  Power
    levels are SINR-ladder points of the serving link at zero interference.
    """
    cfg = scn.config
    if side == "ul":
        ents_at = {j: scn.users_at(j) for j in range(scn.num_bs)}
        gains, noise = scn.channel_ul, scn.noise_ul
        n_sc, bw = cfg.num_ul_subcarriers, scn.subcarrier_bw_ul
        bs_of = {u.user_id: u.bs_id for u in scn.users}
    else:
        ents_at = {j: [o for o in scn.teleops_at(j) if scn.paired_user(o) >= 0]
                   for j in range(scn.num_bs)}
        gains, noise = scn.channel_dl, scn.noise_dl
        n_sc, bw = cfg.num_dl_subcarriers, scn.subcarrier_bw_dl
        bs_of = {o.teleop_id: o.bs_id for o in scn.teleoperators}

    per_bs_opts = []
    for j in range(scn.num_bs):
        ents = ents_at[j]
        opts = []
        # each subcarrier goes to one local entity or stays dark
        for owner in itertools.product([None] + ents, repeat=n_sc):
            links = [(e, k) for k, e in enumerate(owner) if e is not None]
            if not links:
                opts.append(((), ()))
                continue
            ladders = []
            for e, k in links:
                h = gains[e, j, k]
                ladders.append(tuple(noise * (2.0 ** se - 1.0) / h for se in se_ladder))
            for combo in itertools.product(*ladders):
                opts.append((tuple(links), combo))
        per_bs_opts.append(opts)

    cands = []
    for choice in itertools.product(*per_bs_opts):
        power = {}
        for j, (links, levels) in enumerate(choice):
            for (e, k), p in zip(links, levels):
                power[(e, k)] = p
        # budget screening
        ok = True
        if side == "ul":
            for u in range(scn.num_users):
                tot = sum(p for (e, _), p in power.items() if e == u)
                if tot > scn.max_power_user_w(u) * (1 + 1e-12):
                    ok = False
                    break
        else:
            for j in range(scn.num_bs):
                tot = sum(p for (e, _), p in power.items() if bs_of[e] == j)
                if tot > scn.max_power_bs_w(j) * (1 + 1e-12):
                    ok = False
                    break
        if not ok:
            continue
        # exact rates with interference
        rates = {}
        for (e, k), p in power.items():
            j = bs_of[e]
            inter = sum(p2 * gains[e2, j, k] if side == "ul" else p2 * gains[e, bs_of[e2], k]
                        for (e2, k2), p2 in power.items()
                        if k2 == k and bs_of[e2] != j)
            sinr = p * gains[e, j, k] / (noise + inter)
            rates[e] = rates.get(e, 0.0) + math.log2(1.0 + sinr) * bw
        delays = np.full(scn.num_users, math.inf)
        for u in range(scn.num_users):
            ent = u if side == "ul" else scn.paired_teleop(u)
            r = rates.get(ent, 0.0)
            if side == "ul":
                b = delay_component_bounds(scn, u, r, 1.0, 0.0)
                delays[u] = b[0] + b[2]
            else:
                b = delay_component_bounds(scn, u, 1.0, r, 0.0)
                delays[u] = b[1] + b[3]
        cands.append((sum(power.values()), delays))
    return cands


def _enum_nfv(scn: Scenario) -> list[tuple]:
    """(exec seconds, makespans per user) for every per-NF placement and
    user commit order."""
    chains = [len(scn.service_of(u).chain) for u in range(scn.num_users)]
    slots = sum(chains)
    cands = []
    for flat in itertools.product(range(scn.num_bs), repeat=slots):
        placements, idx = {}, 0
        for u, f_count in enumerate(chains):
            placements[u] = list(flat[idx:idx + f_count])
            idx += f_count
        for order in itertools.permutations(range(scn.num_users)):
            sched = build_schedule(scn, placements, list(order))
            mk = np.array([sched.makespan(u) for u in range(scn.num_users)])
            cands.append((exec_cost(sched, scn), mk))
    return cands


def oracle_candidate_count(scn: Scenario, n_levels: int) -> int:
    # each subcarrier: dark, or one of e local entities at one of n levels
    total_ul = 1
    for j in range(scn.num_bs):
        e = len(scn.users_at(j))
        total_ul *= (1 + e * n_levels) ** scn.config.num_ul_subcarriers
    total_dl = 1
    for j in range(scn.num_bs):
        e = len([o for o in scn.teleops_at(j) if scn.paired_user(o) >= 0])
        total_dl *= (1 + e * n_levels) ** scn.config.num_dl_subcarriers
    slots = sum(len(scn.service_of(u).chain) for u in range(scn.num_users))
    total_nfv = scn.num_bs ** slots * math.factorial(scn.num_users)
    return total_ul * total_dl + total_nfv


def run_oracle_comparison(scn: Scenario, se_ladder=(2.0, 4.0, 6.0),
                          max_candidates: int = 20_000_000,
                          settings: SolverSettings | None = None) -> OracleReport:
    """Exhaustive discrete search vs the heuristic solver on a tiny instance."""
    count = oracle_candidate_count(scn, len(se_ladder))
    if count > max_candidates:
        raise ValueError(f"instance too large for enumeration: "
                         f"~{count:.2e} candidates > {max_candidates:.1e}")

    ul = _enum_side(scn, "ul", se_ladder)
    dl = _enum_side(scn, "dl", se_ladder)
    nfv = _enum_nfv(scn)
    caps = np.array([scn.service_of(u).e2e_delay_max for u in range(scn.num_users)])
    rho1 = scn.config.cost_weight_power
    rho2 = scn.config.cost_weight_exec

    ul_cost = np.array([c[0] for c in ul])
    ul_del = np.stack([c[1] for c in ul])          # (Nu, U)
    dl_cost = np.array([c[0] for c in dl])
    dl_del = np.stack([c[1] for c in dl])

    best = math.inf
    for ex_s, mk in nfv:
        budget = caps - mk                          # radio slack per user
        if np.any(budget <= 0):
            continue
        ok_ul = np.all(ul_del <= budget[None, :], axis=1)  # screen
        if not ok_ul.any():
            continue
        idx = np.where(ok_ul)[0]
        for i in idx:
            need = budget - ul_del[i]
            ok = np.all(dl_del <= need[None, :], axis=1)
            if ok.any():
                cost = rho1 * (ul_cost[i] + dl_cost[ok].min()) + rho2 * ex_s * 1e3
                best = min(best, cost)

    heur = solve_joint(scn, settings)
    report = OracleReport(
        oracle_feasible=math.isfinite(best), oracle_cost=best,
        heuristic_feasible=heur.feasible, heuristic_cost=heur.cost,
        candidates=count)
    if report.oracle_feasible and heur.feasible:
        report.ratio = heur.cost / best if best > 0 else math.inf
    return report
