"""Per-cell energy-spectral-efficiency maximization.

The per-cell problem maximizes sum spectral efficiency divided by total
power draw (fixed circuit power plus efficiency-scaled transmit power)
subject to per-phase BS and per-relay power budgets. After the
Charnes-Cooper substitution the problem is concave: per-stream powers
have closed-form water-filling solutions, relay streams couple their two
hops to the weaker one, and the scaling variable t has a closed form.

The dual variables are iterated to their fixed point: the per-budget
prices (lambda for the two BS phases, nu per relay) are set each
iteration by an exact water-level search on the selected group, and the
ratio price mu follows a Dinkelbach-style update toward the achieved
efficiency. Group selection is re-run every iteration since the argmax
can switch as prices move.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DualDomainError, InvalidInput
from .network import NetworkConfig
from .scheduling import DIRECT_T1, DIRECT_T2, SmcGroup

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
EPSILON = 1e-8
I_MAX = 2000
# Bracket growth cap for the water-level search.
_MAX_BRACKET_DOUBLINGS = 200
# Finite stand-in for an unbounded water level (all prices zero); far above
# any physical budget, so the budget search always binds first.
LEVEL_CAP = 1e30


@dataclass
class DualState:
    lambda_t1: float
    lambda_t2: float
    nu: np.ndarray
    mu: float
    iteration: int = 0

    def copy(self):
        return DualState(
            self.lambda_t1, self.lambda_t2, self.nu.copy(), self.mu, self.iteration
        )

    def as_vector(self):
        return np.concatenate(
            [[self.lambda_t1, self.lambda_t2], self.nu, [self.mu]]
        )


@dataclass
class GroupPowers:
    """Per-unit (physical) powers and rates for one group at given duals."""

    p_d1: np.ndarray  # direct phase-1 streams, watts
    p_d2: np.ndarray  # direct phase-2 BS streams, watts
    p_rb: np.ndarray  # relay BS-hop powers (phase 1), watts
    p_rr: np.ndarray  # relay RN-hop powers (phase 2), watts
    rate_d1: np.ndarray  # bits/s/Hz per stream
    rate_d2: np.ndarray
    rate_rel: np.ndarray

    @property
    def score(self) -> float:
        return float(
            self.rate_d1.sum() + self.rate_d2.sum() + self.rate_rel.sum()
        )


@dataclass
class PowerSolution:
    group: SmcGroup
    group_index: int
    t: float
    objective: float  # transformed objective; equals the model ESE
    p_t1: dict  # member idx -> watts (direct phase 1 / relay BS hop)
    p_t2: dict  # member idx -> watts (direct phase 2 / relay RN hop)
    rates: dict  # member idx -> bits/s/Hz
    duals: DualState = None
    iterations: int = 0
    converged: bool = True

    @property
    def p_tilde_t1(self) -> dict:
        return {i: self.t * p for i, p in self.p_t1.items()}

    @property
    def p_tilde_t2(self) -> dict:
        return {i: self.t * p for i, p in self.p_t2.items()}

    @property
    def c_tilde(self) -> dict:
        return {i: self.t * c for i, c in self.rates.items()}

    def _with_index(self, j: int) -> "PowerSolution":
        self.group_index = j
        return self


class GroupArrays:
    """Stream gains of one group laid out for vectorized water-filling."""

    def __init__(self, group: SmcGroup):
        self.group = group
        self.idx_d1, w_d1 = [], []
        self.idx_d2, w_d2 = [], []
        self.idx_rel, m_rel, w1_rel, w2_rel = [], [], [], []
        for idx, smc in enumerate(group.members):
            if smc.kind == DIRECT_T1:
                self.idx_d1.append(idx)
                w_d1.append(group.gain_t1[idx])
            elif smc.kind == DIRECT_T2:
                self.idx_d2.append(idx)
                w_d2.append(group.gain_t2[idx])
            else:
                self.idx_rel.append(idx)
                m_rel.append(smc.rn)
                w1_rel.append(group.gain_t1[idx])
                w2_rel.append(group.gain_t2[idx])
        self.w_d1 = np.asarray(w_d1)
        self.w_d2 = np.asarray(w_d2)
        self.m_rel = np.asarray(m_rel, dtype=int)
        self.w1_rel = np.asarray(w1_rel)
        self.w2_rel = np.asarray(w2_rel)


def _level(xi: float, mu: float, price: float) -> float:
    denom = (xi * mu + 2.0 * price) * LN2
    if denom < 0.0:
        raise DualDomainError(
            "water level denominator %.3e negative" % denom
        )
    if denom == 0.0:
        # all prices zero: unbounded level; the budget search bounds it
        return LEVEL_CAP
    return min(1.0 / denom, LEVEL_CAP)


def waterfill_direct(gain: float, duals: DualState, phase: str,
                     cfg: NetworkConfig) -> float:
    """Closed-form per-unit power of one direct stream."""
    if gain < 0:
        raise InvalidInput("negative gain")
    if gain == 0:
        return 0.0
    price = duals.lambda_t1 if phase == "T1" else duals.lambda_t2
    level = _level(cfg.xi_b, duals.mu, price)
    return max(level - cfg.gap_noise_w / gain, 0.0)


def waterfill_relay(gain_br: float, gain_ru: float, duals: DualState,
                    m: int, cfg: NetworkConfig):
    """Per-unit powers of one relay stream's two hops.

    Each hop gets its own water-filling level, then the stronger hop is
    throttled so neither side wastes power the other cannot match; the
    resulting hop SNRs are equal whenever both are positive.
    """
    if gain_br <= 0 or gain_ru <= 0:
        return 0.0, 0.0
    lvl_b = _level(cfg.xi_b, duals.mu, duals.lambda_t1)
    lvl_r = _level(cfg.xi_r, duals.mu, float(duals.nu[m]))
    d = cfg.gap_noise_w
    p_b = max(lvl_b - d / gain_br, 0.0)
    p_r = max(lvl_r - d / gain_ru, 0.0)
    return (
        min(gain_ru / gain_br * p_r, p_b),
        min(gain_br / gain_ru * p_b, p_r),
    )


def _rate(snr: np.ndarray) -> np.ndarray:
    return 0.5 * np.log2(1.0 + snr)


def waterfill_group(arrays: GroupArrays, duals: DualState,
                    cfg: NetworkConfig) -> GroupPowers:
    d = cfg.gap_noise_w
    lvl1 = _level(cfg.xi_b, duals.mu, duals.lambda_t1)
    lvl2 = _level(cfg.xi_b, duals.mu, duals.lambda_t2)
    p_d1 = np.maximum(lvl1 - d / arrays.w_d1, 0.0) if arrays.w_d1.size else np.zeros(0)
    p_d2 = np.maximum(lvl2 - d / arrays.w_d2, 0.0) if arrays.w_d2.size else np.zeros(0)
    if arrays.w1_rel.size:
        nu = duals.nu[arrays.m_rel]
        denom = (cfg.xi_r * duals.mu + 2.0 * nu) * LN2
        if np.any(denom < 0):
            raise DualDomainError("relay water level denominator negative")
        lvl_r = np.minimum(
            np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), LEVEL_CAP),
            LEVEL_CAP,
        )
        pb_unc = np.maximum(lvl1 - d / arrays.w1_rel, 0.0)
        pr_unc = np.maximum(lvl_r - d / arrays.w2_rel, 0.0)
        p_rb = np.minimum(arrays.w2_rel / arrays.w1_rel * pr_unc, pb_unc)
        p_rr = np.minimum(arrays.w1_rel / arrays.w2_rel * pb_unc, pr_unc)
        snr_rel = np.minimum(arrays.w1_rel * p_rb, arrays.w2_rel * p_rr) / d
    else:
        p_rb = p_rr = snr_rel = np.zeros(0)
    return GroupPowers(
        p_d1=p_d1,
        p_d2=p_d2,
        p_rb=p_rb,
        p_rr=p_rr,
        rate_d1=_rate(arrays.w_d1 * p_d1 / d) if p_d1.size else np.zeros(0),
        rate_d2=_rate(arrays.w_d2 * p_d2 / d) if p_d2.size else np.zeros(0),
        rate_rel=_rate(snr_rel) if arrays.w1_rel.size else np.zeros(0),
    )


def transmit_energy_rate(powers: GroupPowers, cfg: NetworkConfig) -> float:
    """Efficiency-weighted transmit power term of the denominator, watts."""
    bs = powers.p_d1.sum() + powers.p_d2.sum() + powers.p_rb.sum()
    rn = powers.p_rr.sum()
    return 0.5 * (cfg.xi_b * bs + cfg.xi_r * rn)


def optimal_t(powers: GroupPowers, cfg: NetworkConfig) -> float:
    return 1.0 / (cfg.fixed_power_w + transmit_energy_rate(powers, cfg))


def score_group(arrays: GroupArrays, duals: DualState, cfg: NetworkConfig):
    powers = waterfill_group(arrays, duals, cfg)
    return powers.score, powers


def select_group_and_t(group_arrays: list, duals: DualState,
                       cfg: NetworkConfig):
    """Score every group, pick the argmax (ties to lowest index), and
    compute the optimal scaling t for the winner."""
    if not group_arrays:
        raise InvalidInput("no groups to select from")
    best_j, best_score, best_powers = 0, -np.inf, None
    for j, arrays in enumerate(group_arrays):
        score, powers = score_group(arrays, duals, cfg)
        if score > best_score:
            best_j, best_score, best_powers = j, score, powers
    t = optimal_t(best_powers, cfg)
    return best_j, t, best_powers


def _search_price(residual, lo: float = 0.0) -> float:
    """Smallest nonnegative price driving the budget residual to <= 0.

    residual(price) = power sum - budget, nonincreasing in price.
    """
    if residual(lo) <= 0.0:
        return lo
    hi = max(lo, 1.0)
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        hi *= 2.0
        if residual(hi) <= 0.0:
            break
    else:
        raise DualDomainError("budget residual never becomes feasible")
    return float(brentq(residual, lo, hi, xtol=1e-16, rtol=1e-15))


def update_duals(arrays: GroupArrays, duals: DualState,
                 cfg: NetworkConfig) -> DualState:
    """Exact coordinate update of all dual prices against one group.

    Each budget price is set by a water-level search so its constraint
    holds with complementary slackness at the current other prices; mu is
    then moved to the achieved efficiency (Dinkelbach step).
    """
    new = duals.copy()

    def phase1_residual(lam):
        trial = new.copy()
        trial.lambda_t1 = lam
        p = waterfill_group(arrays, trial, cfg)
        return p.p_d1.sum() + p.p_rb.sum() - cfg.p_max_b_w

    new.lambda_t1 = _search_price(phase1_residual)

    def phase2_residual(lam):
        trial = new.copy()
        trial.lambda_t2 = lam
        return waterfill_group(arrays, trial, cfg).p_d2.sum() - cfg.p_max_b_w

    new.lambda_t2 = _search_price(phase2_residual)

    for m in range(len(new.nu)):
        if not np.any(arrays.m_rel == m):
            new.nu[m] = 0.0
            continue

        def rn_residual(price, m=m):
            trial = new.copy()
            trial.nu[m] = price
            p = waterfill_group(arrays, trial, cfg)
            return p.p_rr[arrays.m_rel == m].sum() - cfg.p_max_r_w

        new.nu[m] = _search_price(rn_residual)

    powers = waterfill_group(arrays, new, cfg)
    new.mu = powers.score / (cfg.fixed_power_w + transmit_energy_rate(powers, cfg))
    new.iteration = duals.iteration + 1
    return new


def initial_duals(cfg: NetworkConfig) -> DualState:
    return DualState(
        lambda_t1=0.0,
        lambda_t2=0.0,
        nu=np.zeros(cfg.m_relays),
        mu=1.0 / cfg.fixed_power_w,
    )


def _solution_from_powers(groups, j, powers: GroupPowers, cfg,
                          duals=None, iterations=0, converged=True):
    arrays = GroupArrays(groups[j]) if not isinstance(groups[j], GroupArrays) else groups[j]
    group = arrays.group
    t = optimal_t(powers, cfg)
    p_t1, p_t2, rates = {}, {}, {}
    for i, idx in enumerate(arrays.idx_d1):
        p_t1[idx] = float(powers.p_d1[i])
        rates[idx] = float(powers.rate_d1[i])
    for i, idx in enumerate(arrays.idx_d2):
        p_t2[idx] = float(powers.p_d2[i])
        rates[idx] = float(powers.rate_d2[i])
    for i, idx in enumerate(arrays.idx_rel):
        p_t1[idx] = float(powers.p_rb[i])
        p_t2[idx] = float(powers.p_rr[i])
        rates[idx] = float(powers.rate_rel[i])
    return PowerSolution(
        group=group,
        group_index=j,
        t=t,
        objective=t * powers.score,
        p_t1=p_t1,
        p_t2=p_t2,
        rates=rates,
        duals=duals,
        iterations=iterations,
        converged=converged,
    )


def solve_group(arrays: GroupArrays, cfg: NetworkConfig,
                eps: float = EPSILON, i_max: int = I_MAX):
    """Iterate the dual prices of one group to their fixed point."""
    duals = initial_duals(cfg)
    converged = False
    for _ in range(i_max):
        new = update_duals(arrays, duals, cfg)
        delta = float(np.max(np.abs(new.as_vector() - duals.as_vector())))
        duals = new
        if delta < eps:
            converged = True
            break
    powers = waterfill_group(arrays, duals, cfg)
    return duals, powers, converged


def solve_esem(groups: list, cfg: NetworkConfig, eps: float = EPSILON,
               i_max: int = I_MAX) -> PowerSolution:
    """Dual-decomposition solve of one cell's efficiency maximization.

    Only the selected group transmits, so the power budgets never couple
    groups: each group's inner problem is solved to its own dual fixed
    point and the argmax is taken over the converged objectives (ties go
    to the lowest index). Iterating a joint loop that re-selects the
    argmax at shared prices can two-cycle between near-tied groups; this
    per-group decomposition is equivalent and stable.
    """
    if not groups:
        raise InvalidInput("cell has no finalized groups")
    best = None
    iterations = 0
    all_converged = True
    for j, group in enumerate(groups):
        arrays = GroupArrays(group)
        duals, powers, conv = solve_group(arrays, cfg, eps, i_max)
        iterations = max(iterations, duals.iteration)
        all_converged = all_converged and conv
        objective = optimal_t(powers, cfg) * powers.score
        if best is None or objective > best[0]:
            best = (objective, j, arrays, duals, powers)
    _, j, arrays, duals, powers = best
    return _solution_from_powers(
        [arrays], 0, powers, cfg,
        duals=duals, iterations=iterations, converged=all_converged,
    )._with_index(j)


def solve_epa(groups: list, cfg: NetworkConfig, rng) -> PowerSolution:
    """Equal-power baseline: random group, budgets split evenly."""
    if not groups:
        raise InvalidInput("cell has no finalized groups")
    j = int(rng.integers(len(groups)))
    arrays = GroupArrays(groups[j])
    d = cfg.gap_noise_w
    n_ph1 = len(arrays.idx_d1) + len(arrays.idx_rel)
    p1 = cfg.p_max_b_w / n_ph1 if n_ph1 else 0.0
    p2 = cfg.p_max_b_w / len(arrays.idx_d2) if arrays.idx_d2 else 0.0
    p_d1 = np.full(len(arrays.idx_d1), p1)
    p_d2 = np.full(len(arrays.idx_d2), p2)
    p_rb = np.full(len(arrays.idx_rel), p1)
    p_rr = np.zeros(len(arrays.idx_rel))
    for m in set(arrays.m_rel.tolist()):
        mask = arrays.m_rel == m
        p_rr[mask] = cfg.p_max_r_w / mask.sum()
    snr_rel = (
        np.minimum(arrays.w1_rel * p_rb, arrays.w2_rel * p_rr) / d
        if p_rb.size
        else np.zeros(0)
    )
    powers = GroupPowers(
        p_d1=p_d1,
        p_d2=p_d2,
        p_rb=p_rb,
        p_rr=p_rr,
        rate_d1=_rate(arrays.w_d1 * p_d1 / d) if p_d1.size else np.zeros(0),
        rate_d2=_rate(arrays.w_d2 * p_d2 / d) if p_d2.size else np.zeros(0),
        rate_rel=_rate(snr_rel) if snr_rel.size else np.zeros(0),
    )
    sol = _solution_from_powers([arrays], 0, powers, cfg)
    sol.group_index = j
    return sol


def transformed_rate(s_tilde: float, p_tilde: float, gain: float,
                     cfg: NetworkConfig) -> float:
    """Perspective form of one stream's rate: (s/2)log2(1 + w p / (s d)).

    Zero by continuity when s_tilde is 0.
    """
    if s_tilde <= 0.0 or p_tilde <= 0.0 or gain <= 0.0:
        return 0.0
    return 0.5 * s_tilde * np.log2(
        1.0 + gain * p_tilde / (s_tilde * cfg.gap_noise_w)
    )


def transformed_objective(arrays: GroupArrays, s_tilde: float,
                          p_d1, p_d2, p_rb, p_rr,
                          cfg: NetworkConfig) -> float:
    """Transformed per-cell objective at arbitrary transformed powers.

    Relay streams contribute the weaker of their two hop rates.
    """
    total = 0.0
    for w, p in zip(arrays.w_d1, np.atleast_1d(p_d1)):
        total += transformed_rate(s_tilde, p, w, cfg)
    for w, p in zip(arrays.w_d2, np.atleast_1d(p_d2)):
        total += transformed_rate(s_tilde, p, w, cfg)
    for w1, w2, pb, pr in zip(
        arrays.w1_rel, arrays.w2_rel, np.atleast_1d(p_rb), np.atleast_1d(p_rr)
    ):
        total += min(
            transformed_rate(s_tilde, pb, w1, cfg),
            transformed_rate(s_tilde, pr, w2, cfg),
        )
    return total
