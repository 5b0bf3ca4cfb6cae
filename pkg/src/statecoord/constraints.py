"""Evaluation and maximization of the information constraint

    I(U,W;Y) - I(W;S|U) - H(U)

over auxiliary kernels Q(w|u,s,x), and of its variants: decoder side
information, free input policy, state amplification (U = S), independent
source/state, and the correlation-gain comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .models import (
    ChannelLaw,
    InputPolicy,
    ModelError,
    SourceStateModel,
    check_alphabets,
    source_is_diagonal,
    source_is_product,
)
from .pmf import (
    ConditionalKernel,
    chain_compose,
    conditional_mutual_information,
    entropy,
    mutual_information,
)
from .simplex import entropy_terms, maximize_on_simplices

ACHIEVABLE = "achievable"
NOT_ACHIEVABLE = "not-achievable"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class OptimizerConfig:
    card_w: Optional[int] = None  # None: |U|*|S|*|X| + 2
    restarts: int = 32
    max_iters: int = 500
    step_tol: float = 1e-12
    value_tol: float = 1e-4
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.card_w is not None and self.card_w < 1:
            raise ValueError("card_w must be >= 1")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if self.value_tol <= 0 or self.step_tol <= 0:
            raise ValueError("tolerances must be positive")

    def resolve_card_w(self, src: SourceStateModel, ch: ChannelLaw) -> int:
        if self.card_w is not None:
            return self.card_w
        return src.U.size * src.S.size * ch.X.size + 2


@dataclass
class ConstraintResult:
    value: float
    verdict: str
    aux: Optional[np.ndarray] = None      # Q(w|u,s,x) as [u][s][x][w]
    policy: Optional[np.ndarray] = None   # Q(x|u,s) as [u][s][x]
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"value": self.value, "verdict": self.verdict}
        if self.policy is not None:
            d["policy"] = self.policy.tolist()
        if self.aux is not None:
            d["aux"] = self.aux.tolist()
        d["diagnostics"] = self.diagnostics
        return d


def verdict(value: float, tol: float) -> str:
    if value > tol:
        return ACHIEVABLE
    if value < -tol:
        return NOT_ACHIEVABLE
    return BOUNDARY


# -- direct evaluation -----------------------------------------------------

def scheme_joint(src: SourceStateModel, pol: InputPolicy, ch: ChannelLaw, aux):
    """The joint over (U, S, X, W, Y) built from P_us, Q(x|u,s), Q(w|u,s,x), T."""
    check_alphabets(src, ch, pol)
    if not isinstance(aux, ConditionalKernel):
        aux = ConditionalKernel.from_array(("U", "S", "X"), "W", aux)
    return chain_compose([src.P_us, pol.Q, aux, ch.T])


def constraint_value(src: SourceStateModel, pol: InputPolicy, ch: ChannelLaw, aux) -> float:
    """I(U,W;Y) - I(W;S|U) - H(U) for a fixed auxiliary kernel."""
    p = scheme_joint(src, pol, ch, aux)
    return (mutual_information(p, ("U", "W"), "Y")
            - conditional_mutual_information(p, "W", "S", "U")
            - entropy(p, "U"))


# -- the tensor problem shared by all optimizers ---------------------------

_LABELS = "USZXWY"


def _mi(a: str, b: str):
    return [(1.0, a), (1.0, b), (-1.0, a + b)]


def _cmi(a: str, b: str, c: str):
    return [(1.0, a + c), (1.0, b + c), (-1.0, a + b + c), (-1.0, c)]


def _scale(terms, k):
    return [(k * c, s) for c, s in terms]


GP_TERMS = _mi("UW", "Y") + _scale(_cmi("W", "S", "U"), -1) + [(-1.0, "U")]
SIDE_INFO_TERMS = _mi("UW", "YZ") + _scale(_cmi("W", "S", "U"), -1) + [(-1.0, "U")]
AMPLIFICATION_TERMS = _mi("SX", "Y") + [(-1.0, "S")]
INDEPENDENT_TERMS = _mi("W", "Y") + _scale(_mi("W", "S"), -1) + [(-1.0, "U")]
LEAKAGE_TERMS = _mi("U", "Y")


class _KernelProblem:
    """Objective sum(coef * H(.)) on the joint P(u,s,z) V(x,w|u,s) T(y|x,s).

    ``mode`` picks the free variable:
      aux   - Q(w|u,s,x) with Q(x|u,s) fixed, shape (U,S,X,W)
      joint - Q(x,w|u,s), shape (U,S,X*W)
      state - Q(x,w|s), shape (S,X*W)
    """

    def __init__(self, P_usz: np.ndarray, T_xsy: np.ndarray, card_w: int, terms, mode: str,
                 policy: Optional[np.ndarray] = None):
        self.P = np.asarray(P_usz, dtype=float)
        self.T = np.transpose(np.asarray(T_xsy, dtype=float), (1, 0, 2))  # (s, x, y)
        self.nu, self.ns, _ = self.P.shape
        self.nx = self.T.shape[1]
        self.nw = card_w
        self.terms = terms
        self.mode = mode
        self.policy = policy
        if mode == "aux":
            self.shape = (self.nu, self.ns, self.nx, self.nw)
        elif mode == "joint":
            self.shape = (self.nu, self.ns, self.nx * self.nw)
        elif mode == "state":
            self.shape = (self.ns, self.nx * self.nw)
        else:
            raise ValueError(mode)

    def V(self, K: np.ndarray) -> np.ndarray:
        if self.mode == "aux":
            return self.policy[..., None] * K
        if self.mode == "joint":
            return K.reshape(self.nu, self.ns, self.nx, self.nw)
        return np.broadcast_to(K.reshape(1, self.ns, self.nx, self.nw),
                               (self.nu, self.ns, self.nx, self.nw))

    def joint(self, K: np.ndarray) -> np.ndarray:
        return np.einsum("usz,usxw,sxy->uszxwy", self.P, self.V(K), self.T)

    def __call__(self, K: np.ndarray):
        value, dJ = entropy_terms(self.joint(K), _LABELS, self.terms)
        dV = np.einsum("usz,sxy,uszxwy->usxw", self.P, self.T, dJ)
        if self.mode == "aux":
            dK = dV * self.policy[..., None]
        elif self.mode == "joint":
            dK = dV.reshape(self.shape)
        else:
            dK = dV.sum(axis=0).reshape(self.shape)
        return value, dK

    def split(self, K: np.ndarray):
        """(policy [u][s][x], aux [u][s][x][w]) for a solution K."""
        V = np.asarray(self.V(K))
        pol = V.sum(axis=3)
        aux = np.divide(V, pol[..., None], out=np.full(V.shape, 1.0 / self.nw),
                        where=pol[..., None] > 0)
        return pol, aux


def _usz(src: SourceStateModel, side_info: bool = False) -> np.ndarray:
    if side_info:
        return np.asarray(src.P_usz.table)
    return np.asarray(src.P_us.table)[..., None]


def _run(problem: _KernelProblem, cfg: OptimizerConfig, init=(), sign: float = 1.0):
    res = maximize_on_simplices(problem, problem.shape, restarts=cfg.restarts,
                                max_iters=cfg.max_iters, step_tol=cfg.step_tol,
                                seed=cfg.seed, init=init, workers=cfg.workers)
    pol, aux = problem.split(res.x)
    value = sign * res.value
    diag = {
        "card_w": problem.nw,
        "restart_values": [sign * v for v in res.values],
        "converged": res.converged,
        "best_restart": res.best_restart,
    }
    return value, pol, aux, res.x, diag


def _result(value, pol, aux, diag, cfg) -> ConstraintResult:
    return ConstraintResult(value, verdict(value, cfg.value_tol), aux, pol, diag)


# -- public optimizers -----------------------------------------------------

def maximize_over_aux(src: SourceStateModel, pol: InputPolicy, ch: ChannelLaw,
                      cfg: OptimizerConfig = OptimizerConfig()) -> ConstraintResult:
    """Best constraint value for a fixed input policy."""
    check_alphabets(src, ch, pol)
    nw = cfg.resolve_card_w(src, ch)
    prob = _KernelProblem(_usz(src), ch.T.table, nw, GP_TERMS, "aux", np.asarray(pol.Q.table))
    value, _, aux, _, diag = _run(prob, cfg)
    return _result(value, np.asarray(pol.Q.table), aux, diag, cfg)


def side_info_constraint(src: SourceStateModel, pol: InputPolicy, ch: ChannelLaw,
                         cfg: OptimizerConfig = OptimizerConfig()) -> ConstraintResult:
    """Best value of I(U,W;Y,Z) - I(W;S|U) - H(U) with Z ~ P(z|u,s) seen by the decoder."""
    if src.P_usz is None:
        raise ModelError("side_info_constraint needs a source with P_usz")
    check_alphabets(src, ch, pol)
    nw = cfg.resolve_card_w(src, ch)
    prob = _KernelProblem(_usz(src, True), ch.T.table, nw, SIDE_INFO_TERMS, "aux",
                          np.asarray(pol.Q.table))
    value, _, aux, _, diag = _run(prob, cfg)
    return _result(value, np.asarray(pol.Q.table), aux, diag, cfg)


def lossless_best(src: SourceStateModel, ch: ChannelLaw, cfg: OptimizerConfig = OptimizerConfig(),
                  init: Sequence[np.ndarray] = ()) -> ConstraintResult:
    """Constraint maximized jointly over Q(x|u,s) and Q(w|u,s,x).

    ``init`` holds optional warm starts as Q(x,w|u,s) arrays of shape
    (U, S, X, card_w).
    """
    check_alphabets(src, ch)
    nw = cfg.resolve_card_w(src, ch)
    prob = _KernelProblem(_usz(src), ch.T.table, nw, GP_TERMS, "joint")
    init = [np.asarray(k).reshape(prob.shape) for k in init]
    value, pol, aux, _, diag = _run(prob, cfg, init)
    return _result(value, pol, aux, diag, cfg)


def state_amplification_value(src: SourceStateModel, ch: ChannelLaw,
                              cfg: OptimizerConfig = OptimizerConfig()) -> ConstraintResult:
    """max over Q(x|s) of I(S,X;Y) - H(S), for a source with U = S."""
    if not source_is_diagonal(src):
        raise ModelError("state amplification needs U = S (diagonal P_us)")
    check_alphabets(src, ch)
    prob = _KernelProblem(_usz(src), ch.T.table, 1, AMPLIFICATION_TERMS, "state")
    value, pol, aux, _, diag = _run(prob, cfg)
    return _result(value, pol, aux, diag, cfg)


def _independent_style(src, ch, cfg):
    nw = cfg.resolve_card_w(src, ch)
    prob = _KernelProblem(_usz(src), ch.T.table, nw, INDEPENDENT_TERMS, "state")
    value, pol, aux, K, diag = _run(prob, cfg)
    return _result(value, pol, aux, diag, cfg), prob.V(K)


def independent_case_value(src: SourceStateModel, ch: ChannelLaw,
                           cfg: OptimizerConfig = OptimizerConfig()) -> ConstraintResult:
    """max over Q(x,w|s) of I(W;Y) - I(W;S) - H(U), for U independent of S."""
    if not source_is_product(src):
        raise ModelError("independent-case reduction needs P_us = P_u P_s")
    check_alphabets(src, ch)
    return _independent_style(src, ch, cfg)[0]


def min_leakage(src: SourceStateModel, ch: ChannelLaw,
                cfg: OptimizerConfig = OptimizerConfig()) -> ConstraintResult:
    """min over Q(x|s) of I(U;Y) on the composed joint."""
    check_alphabets(src, ch)
    prob = _KernelProblem(_usz(src), ch.T.table, 1, _scale(LEAKAGE_TERMS, -1), "state")
    value, pol, aux, _, diag = _run(prob, cfg, sign=-1.0)
    return ConstraintResult(max(value, 0.0), "", aux, pol, diag)


@dataclass
class GainReport:
    lhs_general: float
    lhs_independent_style: float
    difference: float
    rhs_min_IUY: float
    holds: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def correlation_gain_check(src: SourceStateModel, ch: ChannelLaw,
                           cfg: OptimizerConfig = OptimizerConfig()) -> GainReport:
    """Compare the free-policy constraint with its state-only restriction and
    check that the gap is at least min over Q(x|s) of I(U;Y)."""
    check_alphabets(src, ch)
    indep, V = _independent_style(src, ch, cfg)
    # the restricted optimum is feasible for the general problem
    general = lossless_best(src, ch, cfg, init=[np.asarray(V)])
    rhs = min_leakage(src, ch, cfg).value
    diff = general.value - indep.value
    return GainReport(general.value, indep.value, diff, rhs, bool(diff >= rhs - cfg.value_tol))
