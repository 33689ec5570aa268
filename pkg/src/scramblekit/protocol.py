"""Bound-saturating operator-growth protocol: planner, exact gate-level
simulator, and an exact Markov-chain size/imbalance predictor.

The protocol works in the ladder basis {1, X+, X-, Z}.  Starting from
X+ at a source vertex, each step l first applies a collective ZZ
rotation exp(-i tau/2 Z_{R_{l-1}} Z_{R_l}) (for l = 1, the source plays
the role of R_0), which multiplies every string by
exp(i j tau Z_{R_l}) with j the string's ladder imbalance in R_{l-1},
then a pi/2 rotation about Y on R_l mapping Z -> X, X -> -Z sitewise.

Consequences used throughout (each verified against dense-unitary
oracles in the tests):

* a string with imbalance j expands into R_l with Z-subset amplitudes
  cos(j tau)^{M-m} (i sin(j tau))^m, so the region size is
  Binomial(M, sin^2(j tau));
* the subsequent Y rotation splits every new X into (X+ + X-)/sqrt(2),
  giving the centered-binomial imbalance law C(s, (s+j)/2) 2^{-s};
* distinct strings evolve in orthogonal subspaces, so the per-step
  (size, imbalance) weights propagate as an exact Markov chain in j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import binom, norm

from .errors import CapacityError, PlanningError, ProtocolStateError
from .pauli import XpmOperator

_SQRT_HALF = 1.0 / math.sqrt(2.0)

EXACT_PROTOCOL_LIMIT = 12


@dataclass
class ProtocolPlan:
    """Regions, angle, and constants of one protocol instance."""

    n: int
    g: int
    m: int
    tau: float
    alpha: float
    epsilon: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    t_x: float
    c4_feasible: bool
    source: int = 0
    regions: List[range] = field(default_factory=list)

    def __post_init__(self):
        if not self.regions:
            self.regions = [
                range(1 + l * self.m, 1 + (l + 1) * self.m) for l in range(self.g)
            ]

    @property
    def p0(self) -> float:
        return 2.0 ** (-1.0 / (2.0 * self.g))

    @property
    def t_z(self) -> float:
        return self.c3 * self.n ** self.alpha * self.tau

    def region(self, step: int) -> range:
        """1-based step index -> its region."""
        return self.regions[step - 1]


def imbalance_tail(s: int, cut: float) -> float:
    """P(|j| > cut) for the centered-binomial imbalance on s ladder letters."""
    if s == 0:
        return 0.0
    k_hi = math.floor((s + cut) / 2.0)
    return float(2.0 * binom.sf(k_hi, s, 0.5))


def solve_c4(p0: float, s_lo: int, s_hi: int) -> Tuple[float, bool]:
    """Largest c with p0 < P(|j| > c sqrt(s)) for every s in [s_lo, s_hi].

    The tail is decreasing in c, so the condition holds on an interval
    (0, c*]; c* is found by bisection over the exact binomial tails on
    the low end of the range plus a log-spaced subsample, capped by the
    large-s normal limit 2 Phi(-c) > p0.  Returns (c4, feasible); when
    even c -> 0 fails (the even-s center mass already exceeds 1 - p0 for
    some admissible s), feasible is False and the normal-limit cap is
    returned for diagnostics.
    """
    s_lo = max(1, s_lo)
    s_hi = max(s_lo, s_hi)
    dense_hi = min(s_hi, s_lo + 512)
    samples = list(range(s_lo, dense_hi + 1))
    if s_hi > dense_hi:
        extra = np.unique(
            np.round(np.geomspace(dense_hi + 1, s_hi, 64)).astype(np.int64)
        )
        samples.extend(int(s) for s in extra)
    samples = np.array(sorted(set(samples)), dtype=np.int64)

    def feasible_at(c: float) -> bool:
        cuts = c * np.sqrt(samples.astype(np.float64))
        k_hi = np.floor((samples + cuts) / 2.0)
        tails = 2.0 * binom.sf(k_hi, samples, 0.5)
        return bool(np.all(tails > p0))

    cap = float(-norm.ppf(p0 / 2.0))  # large-s limit 2 Phi(-c) = p0
    if not feasible_at(1e-9):
        return cap, False
    lo, hi = 0.0, cap
    if feasible_at(cap):
        lo = cap
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if feasible_at(mid):
                lo = mid
            else:
                hi = mid
    return lo * (1.0 - 1e-9), True


def plan_protocol(
    n: int,
    alpha: float,
    epsilon: float,
    g: Optional[int] = None,
    tau: Optional[float] = None,
    c1: float = 0.9,
    c2: float = 1.1,
    c3: float = 1.0,
    c4: Optional[float] = None,
    c5: Optional[float] = None,
    c6: float = 1.5,
    t_x: float = 1.0,
) -> ProtocolPlan:
    """Choose g, M, tau and the protocol constants for target runtime
    scaling N^{alpha + epsilon - 1/2}.

    g defaults to ceil(1/(2 epsilon)) + 1 (so 1/(2g) < epsilon) and
    tau to c6 N^{-(g-1)/(2g)}.  c4 is solved from the imbalance-tail
    condition, c5 defaults to (final ladder entry)/(2M), matching the
    retained-mass factor p0^{2g} = 1/2.
    """
    if epsilon <= 0:
        raise PlanningError("epsilon must be positive")
    if alpha <= 0.5:
        raise PlanningError("runtime target needs alpha > 1/2")
    if g is None:
        g = math.ceil(1.0 / (2.0 * epsilon)) + 1
    if g < 1:
        raise PlanningError("g must be >= 1")
    m = (n - 1) // g
    if m < 1:
        raise PlanningError(
            f"N = {n} too small for g = {g} regions; need N >= {g + 1}"
        )
    if tau is None:
        tau = c6 * n ** (-(g - 1) / (2.0 * g))
    p0 = 2.0 ** (-1.0 / (2.0 * g))
    s1 = math.ceil(c1 * m * math.sin(tau) ** 2)
    if c4 is None:
        c4, c4_feasible = solve_c4(p0, max(s1, 1), m)
    else:
        c4_feasible = True
    plan = ProtocolPlan(
        n=n, g=g, m=m, tau=float(tau), alpha=alpha, epsilon=epsilon,
        c1=c1, c2=c2, c3=c3, c4=float(c4), c5=0.0, c6=c6, t_x=t_x,
        c4_feasible=c4_feasible,
    )
    ladder = s_star_sequence(plan)
    plan.c5 = c5 if c5 is not None else ladder[-1] / (2.0 * m)
    return plan


def feasibility_check(plan: ProtocolPlan) -> Dict[str, float]:
    """Direct numeric substitution of the planner's self-consistency bound.

    The constraint is s*_1 > (4/pi^2) c1 (N/g) tau^2; both sides are
    returned together with the runtime-constant K = g c3 c6 that makes
    g c3 N^alpha tau <= K N^{alpha + epsilon - 1/2} hold whenever
    1/(2g) <= epsilon.
    """
    s1 = s_star_sequence(plan)[0]
    rhs = (4.0 / math.pi ** 2) * plan.c1 * (plan.n / plan.g) * plan.tau ** 2
    return {
        "s1_star": float(s1),
        "rhs": rhs,
        "ს_ok": float(s1 > rhs),
        "s1_ok": float(s1 > rhs),
        "runtime_constant": plan.g * plan.c3 * plan.c6,
        "epsilon_ok": float(1.0 / (2.0 * plan.g) <= plan.epsilon + 1e-12),
    }


def s_star_sequence(plan: ProtocolPlan) -> List[int]:
    """Guaranteed-size ladder: s*_1 = ceil(c1 M sin^2 tau), then
    s*_l = ceil(M sin^2(c4 sqrt(s*_{l-1}) tau))."""
    out = [max(1, math.ceil(plan.c1 * plan.m * math.sin(plan.tau) ** 2))]
    for _l in range(2, plan.g + 1):
        angle = plan.c4 * math.sqrt(out[-1]) * plan.tau
        out.append(max(1, math.ceil(plan.m * math.sin(angle) ** 2)))
    return out


def protocol_runtime(plan: ProtocolPlan) -> float:
    """Total runtime g (t_Z + t_X) with t_Z = c3 N^alpha tau."""
    return plan.g * (plan.t_z + plan.t_x)


# ---------------------------------------------------------------------------
# exact gate-level simulation (ladder-basis strings)
# ---------------------------------------------------------------------------

def _region_letters(key: Tuple[int, int], sites, n: int):
    u, v = key
    for s in sites:
        yield s, ((u >> s) & 1, (v >> s) & 1)


def _imbalance(key: Tuple[int, int], sites) -> Tuple[int, int]:
    """(ladder count, imbalance) of a string over the given sites;
    raises on Z content (protocol precondition)."""
    u, v = key
    count = 0
    imb = 0
    for s in sites:
        bu, bv = (u >> s) & 1, (v >> s) & 1
        if bu:
            count += 1
            imb += 1 if not bv else -1
        elif bv:
            raise ProtocolStateError(
                f"site {s} carries Z; expected only 1/X+/X- before the ZZ gate"
            )
    return count, imb


def apply_uz(step: int, plan: ProtocolPlan, a: XpmOperator) -> XpmOperator:
    """Conjugation by exp(-i tau/2 Z_prev Z_cur).

    Every string acquires the factor exp(i j tau Z_cur) with j its ladder
    imbalance over the previous region (the source for step 1), expanded
    into the product over cur of (cos(j tau) 1_v + i sin(j tau) Z_v).
    Requires 1/X+/X- letters on the previous region and 1/Z on cur.
    """
    prev = [plan.source] if step == 1 else list(plan.region(step - 1))
    cur = list(plan.region(step))
    out = XpmOperator(a.n_sites)
    for key, coeff in a.terms.items():
        _cnt, j = _imbalance(key, prev)
        theta = j * plan.tau
        c_cos, c_sin = math.cos(theta), math.sin(theta)
        expansion = [(key[0], key[1], coeff)]
        for s in cur:
            bit = 1 << s
            new = []
            for u, v, amp in expansion:
                if (u >> s) & 1:
                    raise ProtocolStateError(
                        f"site {s} carries a ladder letter; expected 1/Z in the "
                        "target region"
                    )
                # letter * (cos + i sin Z): 1 -> cos*1 + i sin*Z, Z -> cos*Z + i sin*1
                if abs(c_cos) > 0.0:
                    new.append((u, v, amp * c_cos))
                if abs(c_sin) > 0.0:
                    new.append((u, v ^ bit, amp * 1j * c_sin))
            expansion = new
        for u, v, amp in expansion:
            out.add_string(u, v, amp)
    return out


def apply_uy(step: int, plan: ProtocolPlan, a: XpmOperator) -> XpmOperator:
    """Sitewise pi/2 rotation about Y on the step's region:
    Z -> X, X -> -Z, Y -> Y (exact conjugation, unitary)."""
    cur = list(plan.region(step))
    out = XpmOperator(a.n_sites)
    for key, coeff in a.terms.items():
        expansion = [(key[0], key[1], coeff)]
        for s in cur:
            bit = 1 << s
            new = []
            for u, v, amp in expansion:
                bu, bv = (u >> s) & 1, (v >> s) & 1
                if not bu and not bv:
                    new.append((u, v, amp))
                elif not bu and bv:
                    # Z -> X = (X+ + X-)/sqrt(2)
                    new.append((u | bit, v ^ bit, amp * _SQRT_HALF))
                    new.append((u | bit, v, amp * _SQRT_HALF))
                else:
                    # X+- -> -Z/sqrt(2) +- (X+ - X-)/2
                    sgn = -1.0 if bv else 1.0
                    new.append((u ^ bit, (v | bit) ^ (bit if bv else 0), amp * -_SQRT_HALF))
                    new.append((u | bit, v & ~bit, amp * sgn * 0.5))
                    new.append((u | bit, v | bit, amp * -sgn * 0.5))
            expansion = new
        for u, v, amp in expansion:
            out.add_string(u, v, amp)
    return out


@dataclass
class ProtocolRunResult:
    final: XpmOperator
    sizes: "np.ndarray"
    avg_size: float
    step_joints: List[Dict[Tuple[int, int], float]]
    step_norms: List[float]


def run_protocol_exact(plan: ProtocolPlan, limit: int = EXACT_PROTOCOL_LIMIT) -> ProtocolRunResult:
    """Exact sparse ladder-string propagation through all g steps.

    Records after each step the joint weight of (region ladder count,
    region imbalance) and the running norm; returns the final operator,
    its size distribution over total size, and the average size.
    """
    if plan.n > limit:
        raise CapacityError(
            f"exact protocol simulation limited to {limit} sites, got {plan.n}"
        )
    if 1 + plan.g * plan.m > plan.n:
        raise PlanningError("regions exceed the register")
    state = XpmOperator.single(plan.n, plan.source, "+")
    joints: List[Dict[Tuple[int, int], float]] = []
    norms: List[float] = []
    for step in range(1, plan.g + 1):
        state = apply_uz(step, plan, state)
        state = apply_uy(step, plan, state)
        cur = list(plan.region(step))
        joint: Dict[Tuple[int, int], float] = {}
        for key, coeff in state.terms.items():
            cnt, imb = _imbalance(key, cur)
            w = (coeff * coeff.conjugate()).real
            joint[(cnt, imb)] = joint.get((cnt, imb), 0.0) + w
        joints.append(joint)
        norms.append(state.norm2())
    dist = state.size_distribution()
    return ProtocolRunResult(
        final=state,
        sizes=dist.probs,
        avg_size=dist.mean(),
        step_joints=joints,
        step_norms=norms,
    )


# ---------------------------------------------------------------------------
# exact Markov-chain predictor
# ---------------------------------------------------------------------------

@dataclass
class StepDistribution:
    """Exact per-step law of (region size s, region imbalance j).

    joint is materialized as a dict only at desk scale (M <= joint
    limit); the imbalance marginal, means, and projected masses are
    exact at any M.  Probabilities below the propagation floor are
    dropped, so the stored mass can be marginally below 1.
    """

    step: int
    s_mean: float
    cumulative_size_mean: float
    retained_mass: float
    window_mass: float
    s_star: int
    joint: Optional[Dict[Tuple[int, int], float]]
    j_marginal: Optional[Dict[int, float]]

    def total_mass(self) -> float:
        if self.joint is not None:
            return float(sum(self.joint.values()))
        if self.j_marginal is not None:
            return float(sum(self.j_marginal.values()))
        return float("nan")


_JOINT_LIMIT = 64
_PRUNE = 1e-16


def _size_pmf_window(m: int, p: float):
    """(offset, pmf array) covering all but ~1e-18 of Binomial(m, p)."""
    if p <= 0.0:
        return 0, np.array([1.0])
    if p >= 1.0:
        return m, np.array([1.0])
    lo = int(binom.ppf(1e-18, m, p))
    hi = int(binom.isf(1e-18, m, p))
    lo = max(0, lo - 2)
    hi = min(m, hi + 2)
    ks = np.arange(lo, hi + 1)
    return lo, binom.pmf(ks, m, p)


def _imbalance_pmf(s: int):
    """Centered binomial over j in {-s, -s+2, ..., s}."""
    ks = np.arange(0, s + 1)
    pmf = binom.pmf(ks, s, 0.5)
    js = 2 * ks - s
    return js, pmf


def markov_predict(
    plan: ProtocolPlan,
    joint_limit: int = _JOINT_LIMIT,
) -> List[StepDistribution]:
    """Exact distribution propagation through the g protocol steps.

    Step l draws the region size s ~ Binomial(M, sin^2(j tau)) given the
    previous imbalance j (j = +1 initially: the source is a single X+),
    then the imbalance via the centered binomial given s.  Cost is
    O(g M^2) states in the worst case; windows carrying less than ~1e-16
    mass are dropped.
    """
    ladder = s_star_sequence(plan)
    m = plan.m
    j_prev: Dict[int, float] = {1: 1.0}
    out: List[StepDistribution] = []
    cumulative = 1.0
    for step in range(1, plan.g + 1):
        # fold +-j (equal rates) and mix the size pmfs
        rate_weights: Dict[float, float] = {}
        for j, w in j_prev.items():
            rate = math.sin(j * plan.tau) ** 2
            rate_weights[rate] = rate_weights.get(rate, 0.0) + w
        s_mean = m * sum(r * w for r, w in rate_weights.items())
        s_pmf = np.zeros(m + 1)
        for rate, w in rate_weights.items():
            off, pmf = _size_pmf_window(m, rate)
            s_pmf[off: off + pmf.size] += w * pmf

        s_star = ladder[step - 1]
        ss = np.nonzero(s_pmf > 0)[0]
        cuts = plan.c4 * np.sqrt(ss.astype(np.float64))
        tails = 2.0 * binom.sf(np.floor((ss + cuts) / 2.0), ss, 0.5)
        tails[ss == 0] = 0.0
        retained = float(np.sum(s_pmf[ss] * tails * (ss >= s_star)))
        hi = min(m, math.ceil(plan.c2 * s_star))
        window = float(np.sum(s_pmf[s_star: hi + 1]))

        cumulative += s_mean
        need_marginal = step < plan.g or m <= joint_limit
        joint = None
        j_new: Optional[Dict[int, float]] = None
        if need_marginal:
            j_new = {}
            if m <= joint_limit:
                joint = {}
            for s in ss:
                ps = s_pmf[s]
                if ps < _PRUNE:
                    continue
                js, pmf = _imbalance_pmf(int(s))
                for j, pj in zip(js, pmf):
                    w = ps * pj
                    if w < _PRUNE:
                        continue
                    j_new[int(j)] = j_new.get(int(j), 0.0) + w
                    if joint is not None:
                        joint[(int(s), int(j))] = joint.get((int(s), int(j)), 0.0) + w
        out.append(
            StepDistribution(
                step=step,
                s_mean=float(s_mean),
                cumulative_size_mean=float(cumulative),
                retained_mass=retained,
                window_mass=window,
                s_star=int(s_star),
                joint=joint,
                j_marginal=j_new,
            )
        )
        if j_new is not None:
            j_prev = j_new
    return out
