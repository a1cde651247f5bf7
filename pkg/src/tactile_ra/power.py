"""Minimum-power allocation under rate floors via successive convex
approximation.

The rate of a link group (a user's UL subcarriers, or a teleoperator's DL
subcarriers) is a difference of two concave terms,

    r_g(P) = sum_i log2(noise_i + I_i(P) + P_i g_i)  -  sum_i log2(noise_i + I_i(P)),

with I the inter-cell interference.  Each SCA step replaces the subtracted
term by its first-order Taylor expansion around the previous iterate, which
yields a convex inner problem (an inner approximation, so every iterate
stays feasible and the power objective is non-increasing).  The inner
problem is solved by a log-barrier Newton method on SINR-scaled variables
with analytic gradients and Hessians; the previous iterate is always a
feasible warm start.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class PowerProblem:
    """Min sum(P) s.t. per-group spectral rate floors and power budgets.

    cross_gain[i, q] is the gain from link q's transmitter into link i's
    receiver (zero unless the links share a subcarrier across cells).
    """
    own_gain: np.ndarray        # (n,)
    noise: np.ndarray           # (n,) W per subcarrier
    cross_gain: np.ndarray      # (n, n), zero diagonal
    floor_group: np.ndarray     # (n,) int, group owning each link
    floors: np.ndarray          # (G,) bit/s/Hz
    budget_group: np.ndarray    # (n,) int
    budgets: np.ndarray         # (B,) W
    group_labels: tuple = ()    # diagnostics, one per floor group

    @property
    def n_links(self) -> int:
        return self.own_gain.shape[0]

    @property
    def n_groups(self) -> int:
        return self.floors.shape[0]

    def membership(self) -> np.ndarray:
        m = np.zeros((self.n_groups, self.n_links))
        if self.n_links:
            m[self.floor_group, np.arange(self.n_links)] = 1.0
        return m


def interference(prob: PowerProblem, p: np.ndarray) -> np.ndarray:
    return prob.cross_gain @ p


def group_rates(prob: PowerProblem, p: np.ndarray) -> np.ndarray:
    """True spectral rates per group at power vector p (bit/s/Hz)."""
    sinr = p * prob.own_gain / (prob.noise + interference(prob, p))
    per_link = np.log2(1.0 + sinr)
    return prob.membership() @ per_link


def interference_log_value(prob: PowerProblem, p: np.ndarray) -> np.ndarray:
    """Subtracted DC term per group: sum_i log2(noise_i + I_i)."""
    return prob.membership() @ np.log2(prob.noise + interference(prob, p))


def interference_log_gradient(prob: PowerProblem, p: np.ndarray) -> np.ndarray:
    """(G, n) gradient of the subtracted term w.r.t. every link power.

    Zero for same-cell links (their cross gain is zero); otherwise
    cross_gain / (ln2 * (noise + I)) summed over the group's links.
    """
    inv = 1.0 / (LN2 * (prob.noise + interference(prob, p)))
    return prob.membership() @ (prob.cross_gain * inv[:, None])


@dataclass
class SubsolverInfo:
    success: bool
    iterations: int
    message: str = ""
    fallback: bool = False       # result replaced by warm start
    t_final: float = 0.0         # last barrier parameter (warm-start hint)


def convex_subsolver(prob: PowerProblem, expansion: np.ndarray,
                     warm: np.ndarray | None = None,
                     gap_rel: float = 1e-9,
                     max_newton: int = 600,
                     t0: float | None = None) -> tuple[np.ndarray, SubsolverInfo]:
    """Solve one convexified step around `expansion` by a barrier method.

    Post: the returned point is feasible for the convexified problem and
    its objective is no worse than the warm start's; within gap_rel of the
    inner optimum when the barrier converges (info.success), otherwise the
    last interior iterate (info.fallback marks a kept warm start, e.g. when
    floors and budgets bind simultaneously and no strict interior exists).
    """
    n = prob.n_links
    if warm is None:
        warm = expansion.copy()
    active = np.where(prob.floors > 0.0)[0]
    if n == 0 or active.size == 0:
        return np.zeros(n), SubsolverInfo(True, 0)

    mem = prob.membership()
    i0 = interference(prob, expansion)
    g0 = mem @ np.log2(prob.noise + i0)
    grad0 = interference_log_gradient(prob, expansion)
    lin_const = g0 - grad0 @ expansion           # g_lin(p) = lin_const + grad0 p

    ref = (prob.noise + i0) / prob.own_gain      # SINR scaling: p = ref * x
    M = (prob.cross_gain + np.diag(prob.own_gain)) * ref[None, :]
    memA = mem[active]
    linA = (grad0 * ref[None, :])[active]
    constA = (lin_const + prob.floors)[active]
    cost = ref.copy()                            # objective c^T x == sum(p)

    nb = prob.budgets.shape[0]
    bref = np.zeros((nb, n))
    bref[prob.budget_group, np.arange(n)] = 1.0
    bref *= ref[None, :]

    def rate_slack(x):
        return memA @ np.log2(prob.noise + M @ x) - linA @ x - constA

    def budget_slack(x):
        return prob.budgets - bref @ x

    # strictly interior start from the warm point; floors that bind exactly
    # are opened up by a small uniform scale-up (the true and convexified
    # rates share value and gradient at the expansion point, and the true
    # rate strictly increases along a uniform power scale-up)
    x = warm / ref
    floor_x = max(float(x.max()), 1.0) * 1e-14
    x = np.maximum(x, floor_x)
    start = None
    for bump in (1.0, 1.0 + 1e-9, 1.0 + 1e-6, 1.0 + 1e-3):
        xs = x * bump
        if budget_slack(xs).min() > 0 and xs.min() > 0 and rate_slack(xs).min() > 0:
            start = xs
            break
    if start is None:
        return warm.copy(), SubsolverInfo(True, 0, "no strict interior", True)
    x = start

    m_cons = active.size + nb + n
    t = max(m_cons / max(float(cost @ x), 1e-300), 1e-8)
    if t0 is not None:
        t = max(t, t0)
    mu = 50.0
    newton_used = 0
    message = "converged"
    success = True

    while True:
        for _ in range(40):                      # centering steps
            if newton_used >= max_newton:
                message = "newton budget exhausted"
                success = False
                break
            den = prob.noise + M @ x
            rs = memA @ np.log2(den) - linA @ x - constA
            bs = budget_slack(x)
            inv_den = 1.0 / den
            grad_rate = memA @ (M * inv_den[:, None]) / LN2 - linA

            grad = t * cost - grad_rate.T @ (1.0 / rs) + bref.T @ (1.0 / bs) - 1.0 / x
            wi = memA.T @ (1.0 / rs)             # per-link 1/slack of its group
            H = np.diag(1.0 / x ** 2)
            H += bref.T @ (bref / (bs ** 2)[:, None])
            H += grad_rate.T @ (grad_rate / (rs ** 2)[:, None])
            H += M.T @ (M * (wi * inv_den ** 2 / LN2)[:, None])

            try:
                step = np.linalg.solve(H, -grad)
            except np.linalg.LinAlgError:
                step = -grad / np.diag(H)
            lam2 = float(-grad @ step)
            newton_used += 1
            if lam2 / 2.0 <= 1e-8:
                break

            # longest step keeping the linear slacks strictly positive, plus
            # a first-order bound on the (concave) rate slacks
            s_max = 1.0
            neg = step < 0
            if neg.any():
                s_max = min(s_max, 0.99 * float(np.min(x[neg] / -step[neg])))
            bstep = bref @ step
            pos = bstep > 0
            if pos.any():
                s_max = min(s_max, 0.99 * float(np.min(bs[pos] / bstep[pos])))
            rstep = grad_rate @ step
            rneg = rstep < 0
            if rneg.any():
                s_max = min(s_max, 0.9 * float(np.min(rs[rneg] / -rstep[rneg])))
            s = max(s_max, 0.0)
            phi0 = t * float(cost @ x) - float(np.log(rs).sum()) \
                - float(np.log(bs).sum()) - float(np.log(x).sum())
            accepted = False
            for _ls in range(50):
                xn = x + s * step
                if xn.min() > 0 and budget_slack(xn).min() > 0:
                    rsn = rate_slack(xn)
                    if rsn.min() > 0:
                        phin = t * float(cost @ xn) - float(np.log(rsn).sum()) \
                            - float(np.log(budget_slack(xn)).sum()) \
                            - float(np.log(xn).sum())
                        if phin <= phi0 - 0.25 * s * lam2:
                            x = xn
                            accepted = True
                            break
                s *= 0.5
            if not accepted:
                break                            # stalled at this t
        gap = m_cons / t
        if not success or gap <= gap_rel * max(float(cost @ x), 1e-300):
            break
        t *= mu

    cand = x * ref
    info = SubsolverInfo(success, newton_used, message, t_final=t)
    slack_tol = 1e-9
    feas = rate_slack(x).min() >= -slack_tol and budget_slack(x).min() >= -slack_tol
    if (not feas) or float(cand.sum()) > float(warm.sum()):
        info.fallback = True
        return warm.copy(), info
    return cand, info


@dataclass
class SCAResult:
    power: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    feasible: bool = True
    binding: str = ""            # worst group label when infeasible
    binding_group: int = -1
    deficit: float = 0.0


def _uniform_share(prob: PowerProblem) -> np.ndarray:
    counts = np.bincount(prob.budget_group, minlength=prob.budgets.shape[0])
    counts = np.maximum(counts, 1)
    return prob.budgets[prob.budget_group] / counts[prob.budget_group]


def _feasible(prob: PowerProblem, p: np.ndarray, slack: float = 0.0) -> bool:
    if np.any(np.bincount(prob.budget_group, weights=p,
                          minlength=prob.budgets.shape[0]) > prob.budgets * (1 + 1e-12)):
        return False
    return bool(np.all(group_rates(prob, p) >= prob.floors - slack))


def initial_power(prob: PowerProblem) -> tuple[np.ndarray | None, int, float]:
    """Feasible start: half-budget uniform split over each entity's links.
    If the floors demand more, bisect the common scale upward toward the
    full budget (rates are monotone in a common scale); if the half split
    is loose, bisect downward so the SCA starts near the floors.  Returns
    (point or None, worst_group, deficit); None means some floor exceeds
    capacity at max power."""
    links_per_group = np.bincount(prob.floor_group, minlength=prob.n_groups)
    empty = np.where((prob.floors > 0.0) & (links_per_group == 0))[0]
    if empty.size:
        g = int(empty[0])
        return None, g, float(prob.floors[g])
    share = _uniform_share(prob)
    if _feasible(prob, 0.5 * share):
        lo, hi = 0.0, 0.5
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if _feasible(prob, mid * share):
                hi = mid
            else:
                lo = mid
        return min(1.1 * hi, 0.5) * share, -1, 0.0
    if not _feasible(prob, share):
        deficits = prob.floors - group_rates(prob, share)
        g = int(np.argmax(deficits))
        return None, g, float(deficits[g])
    lo, hi = 0.5, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _feasible(prob, mid * share):
            hi = mid
        else:
            lo = mid
    return min(1.1 * hi, 1.0) * share, -1, 0.0


def _group_waterfill(a: np.ndarray, floor: float) -> np.ndarray:
    """min sum(p) s.t. sum log2(1 + p a) >= floor over one group's links.

    a = gain / (noise + interference).  KKT gives SINR_i = max(0, nu a_i - 1)
    with a single water level nu; the active set is walked in gain order.
    """
    order = np.argsort(-a)
    aa = a[order]
    n = aa.shape[0]
    nu = None
    for m in range(1, n + 1):
        log2nu = (floor - float(np.log2(aa[:m]).sum())) / m
        cand = 2.0 ** log2nu
        if cand * aa[m - 1] >= 1.0 - 1e-12 and (m == n or cand * aa[m] <= 1.0 + 1e-12):
            nu = cand
            break
    if nu is None:                                # numeric corner: use all links
        nu = 2.0 ** ((floor - float(np.log2(aa).sum())) / n)
    sinr = np.maximum(nu * a - 1.0, 0.0)
    return sinr / a


def fixed_point_power(prob: PowerProblem, max_iters: int = 300,
                      rel_tol: float = 1e-10) -> tuple[np.ndarray | None, int, float]:
    """Minimal-power fixed point: each group water-fills against the others'
    current interference; powers are projected onto the budgets.  The update
    is a standard interference function, so from zero power it increases
    monotonically and converges exactly when the floors are jointly
    attainable under the budgets (for the given assignment).
    """
    n = prob.n_links
    groups = {}
    for i in range(n):
        groups.setdefault(int(prob.floor_group[i]), []).append(i)
    group_links = {g: np.array(ix) for g, ix in groups.items() if prob.floors[g] > 0}

    p = np.zeros(n)
    last_deficit = math.inf
    for it in range(max_iters):
        inter = interference(prob, p)
        p_new = np.zeros(n)
        for g, ix in group_links.items():
            a = prob.own_gain[ix] / (prob.noise[ix] + inter[ix])
            p_new[ix] = _group_waterfill(a, float(prob.floors[g]))
        # budget projection
        sums = np.bincount(prob.budget_group, weights=p_new,
                           minlength=prob.budgets.shape[0])
        over = sums > prob.budgets
        if over.any():
            scale = np.ones_like(sums)
            scale[over] = prob.budgets[over] / sums[over]
            p_new = p_new * scale[prob.budget_group]
        if float(np.linalg.norm(p_new - p)) <= rel_tol * (1.0 + float(np.linalg.norm(p))):
            p = p_new
            break
        p = p_new
        if it % 25 == 24:                        # infeasible runs stall early
            deficit = float(np.max(prob.floors - group_rates(prob, p)))
            if deficit > 0 and deficit > 0.999 * last_deficit:
                break
            last_deficit = deficit if deficit > 0 else math.inf

    slack = 1e-9 * float(np.max(prob.floors, initial=1.0))
    if _feasible(prob, p, slack=slack):
        return p, -1, 0.0
    deficits = prob.floors - group_rates(prob, p)
    g = int(np.argmax(deficits))
    return None, g, float(deficits[g])


def _restrict_to_active(prob: PowerProblem) -> tuple[PowerProblem, np.ndarray]:
    """Drop links whose floor group needs no rate: they transmit nothing."""
    keep = prob.floors[prob.floor_group] > 0.0
    idx = np.where(keep)[0]
    sub = PowerProblem(
        own_gain=prob.own_gain[idx], noise=prob.noise[idx],
        cross_gain=prob.cross_gain[np.ix_(idx, idx)],
        floor_group=prob.floor_group[idx], floors=prob.floors,
        budget_group=prob.budget_group[idx], budgets=prob.budgets,
        group_labels=prob.group_labels)
    return sub, idx


def sca_power_allocation(prob: PowerProblem, max_iters: int = 30,
                         tol: float = 1e-9, warm: np.ndarray | None = None
                         ) -> SCAResult:
    """Run the SCA loop to a power vector meeting all floors and budgets.

    The objective trace (total power per iterate, starting point included)
    is non-increasing by construction.
    """
    full_n = prob.n_links
    if not np.any(prob.floors > 0.0):
        return SCAResult(np.zeros(full_n), [0.0], 0, True, True)

    sub, idx = _restrict_to_active(prob)
    if warm is not None:
        warm = warm[idx]

    # a warm point sitting exactly on its floors is still a valid start:
    # the subsolver nudges it into the interior
    if warm is not None and _feasible(sub, warm,
                                      slack=1e-9 * float(np.max(prob.floors))):
        p = warm.copy()
    else:
        p, g, deficit = initial_power(sub)
        if p is None:
            # the uniform split cannot reach the floors (interference-limited
            # at a common scale); fall back to the water-filling fixed point
            p, g, deficit = fixed_point_power(sub)
        if p is None:
            return SCAResult(np.zeros(full_n), [], 0, True, False,
                             _label(prob, g), g, deficit)

    trace = [float(p.sum())]
    converged = False
    it = 0
    t_hint = None
    for it in range(1, max_iters + 1):
        p_new, info = convex_subsolver(sub, p, t0=t_hint)
        if info.t_final > 0:
            t_hint = info.t_final / 50.0         # resume near the barrier end
        trace.append(float(p_new.sum()))
        step = float(np.linalg.norm(p_new - p))
        stalled = it >= 2 and abs(trace[-1] - trace[-2]) <= 1e-8 * max(trace[-2], 1e-300)
        p = p_new
        if step <= tol * (1.0 + float(np.linalg.norm(p))) or stalled:
            converged = True
            break

    ok = _feasible(sub, p, slack=1e-9 * float(np.max(prob.floors, initial=1.0)))
    full_p = np.zeros(full_n)
    full_p[idx] = p
    result = SCAResult(full_p, trace, it, converged, ok)
    if not ok:
        deficits = prob.floors - group_rates(sub, p)
        g = int(np.argmax(deficits))
        result.binding = _label(prob, g)
        result.binding_group = g
        result.deficit = float(deficits[g])
    return result


def _label(prob: PowerProblem, g: int) -> str:
    if prob.group_labels and g < len(prob.group_labels):
        return str(prob.group_labels[g])
    return f"group {g}"
