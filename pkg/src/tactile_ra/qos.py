"""Statistical queuing-delay machinery and the end-to-end delay budget.

Queue bounds follow the effective-bandwidth model for Poisson arrivals:
a service rate r guarantees queuing delay <= D with violation probability
eta * exp(-r (e^theta - 1) D).  All delays are seconds; milliseconds only
appear at I/O boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


def effective_bandwidth(arrival_rate: float, theta: float) -> float:
    """B = Lambda (e^theta - 1) / theta for a Poisson arrival stream."""
    if theta <= 0:
        raise ValueError("QoS exponent theta must be > 0")
    if arrival_rate < 0:
        raise ValueError("arrival rate must be >= 0")
    return arrival_rate * math.expm1(theta) / theta


def queue_violation_prob(arrival_rate: float, theta: float, q_delay: float,
                         nonempty_prob: float = 1.0) -> float:
    """P{queuing delay > q_delay} = eta exp(-Lambda (e^theta - 1) D)."""
    return nonempty_prob * math.exp(-arrival_rate * math.expm1(theta) * q_delay)


def min_rate_for_queue(violation_prob: float, theta: float, q_delay: float) -> float:
    """Smallest service rate meeting the queue-delay guarantee.

    r >= ln(1/delta) / ((e^theta - 1) D).  A zero delay budget demands an
    infinite rate and returns inf as the infeasibility signal.
    """
    if not (0.0 < violation_prob < 1.0):
        raise ValueError("violation probability must lie in (0, 1)")
    if theta <= 0:
        raise ValueError("QoS exponent theta must be > 0")
    if q_delay < 0:
        raise ValueError("queue delay budget must be >= 0")
    if q_delay == 0:
        return math.inf
    return math.log(1.0 / violation_prob) / (math.expm1(theta) * q_delay)


def min_q_delay_for_rate(violation_prob: float, theta: float, rate: float) -> float:
    """Inverse of min_rate_for_queue: least delay budget a rate can certify."""
    if not (0.0 < violation_prob < 1.0):
        raise ValueError("violation probability must lie in (0, 1)")
    if theta <= 0:
        raise ValueError("QoS exponent theta must be > 0")
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if rate == 0:
        return math.inf
    return math.log(1.0 / violation_prob) / (math.expm1(theta) * rate)


def transmission_delay(payload_bits: float, rate: float) -> float:
    """Time to push payload_bits at `rate` bit/s; inf when the rate is 0."""
    if payload_bits < 0 or rate < 0:
        raise ValueError("payload and rate must be >= 0")
    if payload_bits == 0:
        return 0.0
    if rate == 0:
        return math.inf
    return payload_bits / rate


@dataclass(frozen=True)
class DelayBudget:
    """Five-component end-to-end delay split against the service cap."""
    t_ul: float      # UL transmission
    t_dl: float      # DL transmission
    q_ul: float      # UL queuing
    q_dl: float      # DL queuing
    nfs: float       # NF execution (makespan allowance)
    cap: float       # maximum allowable end-to-end delay

    @property
    def total(self) -> float:
        return self.t_ul + self.t_dl + self.q_ul + self.q_dl + self.nfs

    @property
    def residual(self) -> float:
        return self.cap - self.total

    def components(self) -> tuple[float, float, float, float, float]:
        return (self.t_ul, self.t_dl, self.q_ul, self.q_dl, self.nfs)


def check_e2e(budget: DelayBudget, tol: float = 0.0) -> tuple[bool, float]:
    """Feasibility of the five-term sum; residual = cap - total (>=0 ok)."""
    res = budget.residual
    return res >= -tol, res
