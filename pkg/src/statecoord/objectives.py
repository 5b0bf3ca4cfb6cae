"""Best achievable coordination for linear payoffs: minimal source/input
distortion and maximal expected objective over the closure of feasible
input policies.

Both expectations are affine in Q(x|u,s), so over the convex hull of a set
of feasible policies the optimum sits at one of them.  The search walks a
fixed stream of candidate policies (all deterministic ones, then Dirichlet
draws), keeps the best feasible one, and each time the incumbent improves
it bisects along the segment towards the unconstrained optimum while
feasibility holds.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice, product
from typing import Optional

import numpy as np

from .constraints import OptimizerConfig, maximize_over_aux
from .models import ChannelLaw, InputPolicy, SourceStateModel, check_alphabets
from .simplex import restart_rng

MAX_DETERMINISTIC = 4096
BISECTION_STEPS = 12


class NoFeasiblePolicy(ValueError):
    pass


@dataclass
class FeasibleSample:
    policy: np.ndarray          # [u][s][x]
    constraint_value: float
    feasible: bool


def deterministic_policies(nu: int, ns: int, nx: int, limit: int = MAX_DETERMINISTIC):
    """Every map (u, s) -> x as a 0/1 kernel, in lexicographic order."""
    for choice in islice(product(range(nx), repeat=nu * ns), limit):
        Q = np.zeros((nu, ns, nx))
        Q.reshape(-1, nx)[np.arange(nu * ns), choice] = 1.0
        yield Q


def candidate_policies(src: SourceStateModel, ch: ChannelLaw, count: int, seed: int):
    nu, ns, nx = src.U.size, src.S.size, ch.X.size
    yield from deterministic_policies(nu, ns, nx)
    rng = restart_rng(seed, 10 ** 6)
    for _ in range(count):
        yield rng.dirichlet(np.ones(nx), size=(nu, ns))


def evaluate_policy(src, ch, Q, cfg: OptimizerConfig) -> FeasibleSample:
    r = maximize_over_aux(src, InputPolicy.from_array(Q), ch, cfg)
    return FeasibleSample(np.asarray(Q), r.value, r.value >= -cfg.value_tol)


def sample_feasible_policies(src: SourceStateModel, ch: ChannelLaw, cfg: OptimizerConfig,
                             count: int) -> list:
    """All deterministic policies plus ``count`` random ones, each labelled by
    whether its best constraint value clears -value_tol."""
    if count < 1:
        raise ValueError("count must be >= 1")
    check_alphabets(src, ch)
    pols = list(candidate_policies(src, ch, count, cfg.seed))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            return list(ex.map(lambda Q: evaluate_policy(src, ch, Q, cfg), pols))
    return [evaluate_policy(src, ch, Q, cfg) for Q in pols]


@dataclass
class CoordinationResult:
    value: float
    policy: np.ndarray
    constraint_value: float
    mixture: list = field(default_factory=list)   # [(weight, policy)]
    best_infeasible: Optional[float] = None
    samples: int = 0
    feasible_samples: int = 0

    def to_dict(self, name: str = "value") -> dict:
        return {
            name: self.value,
            "policy": self.policy.tolist(),
            "constraint_value": self.constraint_value,
            "mixture": [{"weight": w, "policy": p.tolist()} for w, p in self.mixture],
            "bracket": {"best_infeasible": self.best_infeasible},
            "samples": self.samples,
            "feasible_samples": self.feasible_samples,
        }


def _minimize_affine(src, ch, cost: np.ndarray, cfg: OptimizerConfig, count: int) -> CoordinationResult:
    """Minimize sum(cost * Q) over feasible policies (cost indexed [u][s][x])."""
    samples = sample_feasible_policies(src, ch, cfg, count)

    def val(Q):
        return float(np.sum(cost * Q))

    # unconstrained optimum: per (u, s) the cheapest input
    target = np.zeros_like(cost)
    np.put_along_axis(target, cost.argmin(axis=-1)[..., None], 1.0, axis=-1)
    target_val = val(target)

    best: Optional[FeasibleSample] = None
    best_v = np.inf
    best_infeasible = None
    for smp in samples:
        v = val(smp.policy)
        if not smp.feasible:
            if best_infeasible is None or v < best_infeasible:
                best_infeasible = v
            continue
        if v < best_v:
            best, best_v = smp, v
            if target_val < best_v:
                refined = _bisect_towards(src, ch, smp, target, cfg)
                rv = val(refined.policy)
                if rv < best_v:
                    best, best_v = refined, rv
    if best is None:
        raise NoFeasiblePolicy(
            f"none of {len(samples)} candidate policies satisfies the information constraint "
            f"(best value below -{cfg.value_tol} bits); no coordination with lossless decoding is achievable")
    if best_infeasible is not None and best_infeasible >= best_v:
        best_infeasible = None
    return CoordinationResult(best_v, best.policy, best.constraint_value, [(1.0, best.policy)],
                              best_infeasible, len(samples), sum(s.feasible for s in samples))


def _bisect_towards(src, ch, start: FeasibleSample, target: np.ndarray, cfg) -> FeasibleSample:
    """Furthest feasible point on the segment start -> target (bisection)."""
    end = evaluate_policy(src, ch, target, cfg)
    if end.feasible:
        return end
    lo, hi, best = 0.0, 1.0, start
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        s = evaluate_policy(src, ch, (1 - mid) * start.policy + mid * target, cfg)
        if s.feasible:
            lo, best = mid, s
        else:
            hi = mid
    return best


def distortion_cost(src: SourceStateModel, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distortion must be nonnegative")
    return np.asarray(src.P_us.table)[:, :, None] * d[:, None, :]


def objective_cost(src: SourceStateModel, ch: ChannelLaw, nu) -> np.ndarray:
    """E[nu(U,S,X,Y)] = sum over (u,s,x) of cost * Q(x|u,s)."""
    nu = np.asarray(nu, dtype=float)
    if not np.all(np.isfinite(nu)):
        raise ValueError("objective entries must be finite")
    T = np.asarray(ch.T.table)  # [x][s][y]
    return np.asarray(src.P_us.table)[:, :, None] * np.einsum("xsy,usxy->usx", T, nu)


def min_distortion(src: SourceStateModel, ch: ChannelLaw, d, cfg: OptimizerConfig = OptimizerConfig(),
                   count: int = 64) -> CoordinationResult:
    """Smallest E[d(U,X)] over the achievable policies (an upper estimate of D*)."""
    check_alphabets(src, ch)
    return _minimize_affine(src, ch, distortion_cost(src, d), cfg, count)


def max_objective(src: SourceStateModel, ch: ChannelLaw, nu, cfg: OptimizerConfig = OptimizerConfig(),
                  count: int = 64) -> CoordinationResult:
    """Largest E[nu(U,S,X,Y)] over the achievable policies."""
    check_alphabets(src, ch)
    r = _minimize_affine(src, ch, -objective_cost(src, ch, nu), cfg, count)
    r.value = -r.value
    if r.best_infeasible is not None:
        r.best_infeasible = -r.best_infeasible
    return r
