"""VNF placement and scheduling: end-time recurrence, makespan, exec cost,
and the deadline-driven placement heuristic.

Each BS hosts a sequential server (one NF at a time).  A user's chain is
executed in its fixed order; moving data between BSs costs payload/backhaul
seconds.  The NFV delay of a user is the end time of its last NF, counted
from the start of the frame's NFV phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario

TIME_TOL = 1e-12


def nf_processing_time(payload_bits: float, beta: float, proc_rate: float) -> float:
    """Execution time of one NF: beta * C / Omega."""
    if proc_rate <= 0 or beta <= 0:
        raise ValueError("processing rate and coefficient must be > 0")
    return beta * payload_bits / proc_rate


def transfer_time(payload_bits: float, n1: int, n2: int, backhaul: np.ndarray) -> float:
    """Backhaul transfer between BSs; zero when source == destination."""
    if n1 == n2:
        return 0.0
    cap = backhaul[n1, n2]
    if cap <= 0:
        raise ValueError(f"backhaul capacity {n1}->{n2} must be > 0")
    return payload_bits / cap


@dataclass(frozen=True)
class ScheduleEntry:
    user: int
    nf: int          # index within the user's chain
    bs: int
    start: float
    end: float


@dataclass(frozen=True, eq=False)
class NfvSchedule:
    """Committed placement and timing; immutable once built."""
    entries: tuple[ScheduleEntry, ...]            # in commit order
    home_bs: tuple[int, ...]                      # per user

    def placement(self, u: int, f: int) -> int:
        for e in self.entries:
            if e.user == u and e.nf == f:
                return e.bs
        raise KeyError(f"NF {f} of user {u} is not placed")

    def end_time(self, u: int, f: int) -> float:
        for e in self.entries:
            if e.user == u and e.nf == f:
                return e.end
        raise KeyError(f"NF {f} of user {u} is not placed")

    def user_entries(self, u: int) -> list[ScheduleEntry]:
        ents = [e for e in self.entries if e.user == u]
        ents.sort(key=lambda e: e.nf)
        return ents

    def bs_timeline(self, j: int) -> list[ScheduleEntry]:
        ents = [e for e in self.entries if e.bs == j]
        ents.sort(key=lambda e: (e.start, e.end))
        return ents

    def makespan(self, u: int) -> float:
        ents = self.user_entries(u)
        if not ents:
            raise KeyError(f"user {u} has no placed NFs")
        return ents[-1].end

    def predecessor_pairs(self):
        """Yield (entry, pred_entry_or_None, origin_bs) tuples that the
        end-time recurrence must satisfy: chain predecessors (with the
        origin BS for the transfer term) and same-server predecessors."""
        by_user = {}
        for e in self.entries:
            by_user.setdefault(e.user, []).append(e)
        for u, ents in by_user.items():
            ents.sort(key=lambda e: e.nf)
            prev = None
            for e in ents:
                origin = self.home_bs[u] if prev is None else prev.bs
                yield e, prev, origin
        for j in set(e.bs for e in self.entries):
            line = self.bs_timeline(j)
            for a, b in zip(line, line[1:]):
                yield b, a, b.bs       # same server: no transfer

    def to_rows(self) -> list[tuple]:
        return [(e.user, e.nf, e.bs, e.start, e.end) for e in self.entries]


def makespan(schedule: NfvSchedule, u: int) -> float:
    return schedule.makespan(u)


def end_time(schedule: NfvSchedule, u: int, f: int) -> float:
    return schedule.end_time(u, f)


def exec_cost(schedule: NfvSchedule, scn: Scenario) -> float:
    """Total NF execution time in seconds, summed over placed NFs."""
    total = 0.0
    for e in schedule.entries:
        svc = scn.service_of(e.user)
        beta = svc.chain[e.nf].processing_coefficient_per_bs[e.bs]
        total += nf_processing_time(svc.payload_bits, beta, float(scn.processing[e.bs]))
    return total


# ---------------------------------------------------------------------------
# schedule construction

def build_schedule(scn: Scenario, placements: dict, order: list[int]) -> NfvSchedule:
    """Commit users in `order` with per-NF placements {u: [bs per NF]}.

    Each NF starts as soon as its chain predecessor's data has arrived and
    the chosen server is free (list scheduling, no idle beyond necessity).
    """
    server_free = [0.0] * scn.num_bs
    entries = []
    for u in order:
        svc = scn.service_of(u)
        home = scn.users[u].bs_id
        prev_end, prev_bs = 0.0, home
        for f, nf in enumerate(svc.chain):
            n = placements[u][f]
            ready = prev_end + transfer_time(svc.payload_bits, prev_bs, n, scn.backhaul)
            start = max(ready, server_free[n])
            proc = nf_processing_time(svc.payload_bits,
                                      nf.processing_coefficient_per_bs[n],
                                      float(scn.processing[n]))
            end = start + proc
            entries.append(ScheduleEntry(u, f, n, start, end))
            server_free[n] = end
            prev_end, prev_bs = end, n
    home_bs = tuple(scn.users[u].bs_id for u in range(scn.num_users))
    return NfvSchedule(tuple(entries), home_bs)


@dataclass
class ScheduleOutcome:
    schedule: NfvSchedule
    feasible: bool
    violating_users: list[int] = field(default_factory=list)
    order: list[int] = field(default_factory=list)
    attempts: int = 1
    ops: int = 0                 # placement-work counter for complexity reports


def _chain_completion(scn: Scenario, u: int, n: int, server_free: list[float]) -> float:
    svc = scn.service_of(u)
    home = scn.users[u].bs_id
    arrive = transfer_time(svc.payload_bits, home, n, scn.backhaul)
    t = max(server_free[n], arrive)
    for nf in svc.chain:
        t += nf_processing_time(svc.payload_bits,
                                nf.processing_coefficient_per_bs[n],
                                float(scn.processing[n]))
    return t


def schedule_heuristic(scn: Scenario, deadlines, sort_keys=None) -> ScheduleOutcome:
    """Deadline-ordered whole-chain placement.

    Users are served in ascending order of `sort_keys` (defaults to
    `deadlines`, i.e. the required delay), ties broken by (BS id, user id).
    Each user's whole chain goes to the BS minimising its completion time
    given the servers' committed load.  A user whose makespan misses its
    deadline is swapped ahead of the earliest already-served user with
    enough slack and the placement is rebuilt; after bounded retries the
    remaining violators are reported as infeasible.
    """
    deadlines = np.asarray(deadlines, dtype=float)
    nU = scn.num_users
    if sort_keys is None:
        sort_keys = deadlines
    order = sorted(range(nU),
                   key=lambda u: (sort_keys[u], scn.users[u].bs_id, u))

    max_attempts = 1 + nU * nU
    ops = 0
    attempts = 0
    while True:
        attempts += 1
        server_free = [0.0] * scn.num_bs
        placements = {}
        commit_order = []
        for u in order:
            best_n, best_t = -1, math.inf
            for n in range(scn.num_bs):
                t = _chain_completion(scn, u, n, server_free)
                ops += len(scn.service_of(u).chain)
                if t < best_t - TIME_TOL:
                    best_n, best_t = n, t
            placements[u] = [best_n] * len(scn.service_of(u).chain)
            server_free[best_n] = best_t
            commit_order.append(u)
            ops += len(commit_order)           # A-relation update for u' <= u
        schedule = build_schedule(scn, placements, order)

        violators = [u for u in order
                     if schedule.makespan(u) > deadlines[u] + TIME_TOL]
        if not violators or attempts >= max_attempts:
            return ScheduleOutcome(schedule, not violators, violators,
                                   list(order), attempts, ops)

        # reorder: move the first violator ahead of the earliest earlier
        # user whose slack exceeds the violator's deficit
        v = min(violators, key=lambda u: order.index(u))
        deficit = schedule.makespan(v) - deadlines[v]
        v_pos = order.index(v)
        swap_pos = -1
        for pos in range(v_pos):
            w = order[pos]
            slack = deadlines[w] - schedule.makespan(w)
            if slack > deficit + TIME_TOL:
                swap_pos = pos
                break
        if swap_pos < 0:
            return ScheduleOutcome(schedule, False, violators,
                                   list(order), attempts, ops)
        order[swap_pos], order[v_pos] = order[v_pos], order[swap_pos]
