"""Source/state, channel and input-policy models, plus the parametric
example family (correlated binary source, ternary state-dependent channel).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .pmf import (
    PMF_TOL,
    ConditionalKernel,
    FiniteAlphabet,
    JointPMF,
    chain_compose,
    identity_kernel,
    markov_deficit,
    marginalize,
)

DECOMPOSITION_TOL = 1e-6


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class SourceStateModel:
    """i.i.d. source/state law P(u,s), optionally extended by decoder side
    information Z with joint P(u,s,z)."""

    P_us: JointPMF
    P_usz: Optional[JointPMF] = None

    def __post_init__(self):
        if self.P_us.names != ("U", "S"):
            raise ModelError(f"P_us must have axes (U, S), got {self.P_us.names}")
        if self.P_usz is not None:
            if self.P_usz.names != ("U", "S", "Z"):
                raise ModelError(f"P_usz must have axes (U, S, Z), got {self.P_usz.names}")
            if self.P_usz.axes[:2] != self.P_us.axes:
                raise ModelError("P_usz alphabets disagree with P_us")
            if np.max(np.abs(self.P_usz.table.sum(axis=2) - self.P_us.table)) > PMF_TOL:
                raise ModelError("the (U,S) marginal of P_usz differs from P_us")

    @classmethod
    def from_array(cls, P_us, P_usz=None) -> "SourceStateModel":
        p = JointPMF.from_array(("U", "S"), P_us)
        pz = None if P_usz is None else JointPMF.from_array(("U", "S", "Z"), P_usz)
        return cls(p, pz)

    @property
    def U(self) -> FiniteAlphabet:
        return self.P_us.axes[0]

    @property
    def S(self) -> FiniteAlphabet:
        return self.P_us.axes[1]

    def with_side_info(self, P_z_given_us) -> "SourceStateModel":
        """Attach Z drawn from a kernel P(z|u,s)."""
        ker = ConditionalKernel.from_array(("U", "S"), "Z", P_z_given_us)
        return SourceStateModel(self.P_us, chain_compose([self.P_us, ker]))


@dataclass(frozen=True)
class ChannelLaw:
    """Memoryless state-dependent channel T(y|x,s)."""

    T: ConditionalKernel

    def __post_init__(self):
        if self.T.given_names != ("X", "S") or self.T.out_names != ("Y",):
            raise ModelError(f"channel kernel must be Y | X,S, got {self.T}")

    @classmethod
    def from_array(cls, T_xsy) -> "ChannelLaw":
        return cls(ConditionalKernel.from_array(("X", "S"), "Y", T_xsy))

    @property
    def X(self) -> FiniteAlphabet:
        return self.T.given[0]

    @property
    def S(self) -> FiniteAlphabet:
        return self.T.given[1]

    @property
    def Y(self) -> FiniteAlphabet:
        return self.T.out[0]


@dataclass(frozen=True)
class InputPolicy:
    """Coordination kernel Q(x|u,s)."""

    Q: ConditionalKernel

    def __post_init__(self):
        if self.Q.given_names != ("U", "S") or self.Q.out_names != ("X",):
            raise ModelError(f"policy kernel must be X | U,S, got {self.Q}")

    @classmethod
    def from_array(cls, Q_usx) -> "InputPolicy":
        return cls(ConditionalKernel.from_array(("U", "S"), "X", Q_usx))

    @classmethod
    def state_only(cls, n_u: int, Q_sx) -> "InputPolicy":
        """Lift Q(x|s) to Q(x|u,s) with no dependence on u."""
        Q_sx = np.asarray(Q_sx, dtype=float)
        return cls.from_array(np.broadcast_to(Q_sx, (n_u,) + Q_sx.shape))

    @property
    def X(self) -> FiniteAlphabet:
        return self.Q.out[0]


@dataclass(frozen=True)
class TargetDistribution:
    """A candidate Q(u,s,x,y,uhat) together with the blocks it was built from."""

    joint: JointPMF
    source: Optional[SourceStateModel] = None
    policy: Optional[InputPolicy] = None
    channel: Optional[ChannelLaw] = None
    meta: dict = field(default_factory=dict)


def check_alphabets(src: SourceStateModel, ch: ChannelLaw, pol: Optional[InputPolicy] = None):
    if src.S.size != ch.S.size:
        raise ModelError(f"|S| differs between source ({src.S.size}) and channel ({ch.S.size})")
    if pol is not None:
        if pol.Q.given[0].size != src.U.size or pol.Q.given[1].size != src.S.size:
            raise ModelError("policy (U,S) alphabets do not match the source")
        if pol.X.size != ch.X.size:
            raise ModelError(f"|X| differs between policy ({pol.X.size}) and channel ({ch.X.size})")


def assemble_target(src: SourceStateModel, pol: InputPolicy, ch: ChannelLaw) -> TargetDistribution:
    """P_us (x) Q(x|u,s) (x) T(y|x,s) (x) 1(uhat|u) over (U, S, X, Y, Uh)."""
    check_alphabets(src, ch, pol)
    joint = chain_compose([src.P_us, pol.Q, ch.T, identity_kernel(src.U, "Uh")])
    return TargetDistribution(joint, src, pol, ch)


@dataclass
class DecompositionReport:
    ok: bool
    violations: list = field(default_factory=list)


def check_decomposition(q: JointPMF, src: SourceStateModel, ch: ChannelLaw,
                        tol: float = DECOMPOSITION_TOL) -> DecompositionReport:
    """Test the four conditions that make a joint over (U,S,X,Y,Uh) a valid
    coordination target: source marginal, channel conditional, lossless
    decoder and the chain Y - (X,S) - U."""
    if set(q.names) != {"U", "S", "X", "Y", "Uh"}:
        raise ModelError(f"expected axes U,S,X,Y,Uh, got {q.names}")
    violations = []

    d = float(np.max(np.abs(q.marginal_array(("U", "S")) - src.P_us.table)))
    if d > tol:
        violations.append({"condition": "source-marginal", "deficit": d})

    # channel conditional, on the support of (X,S)
    xsy = q.marginal_array(("X", "S", "Y"))
    xs = xsy.sum(axis=2, keepdims=True)
    cond = np.divide(xsy, xs, out=np.zeros_like(xsy), where=xs > 0)
    d = float(np.max(np.where(xs > 0, np.abs(cond - ch.T.table), 0.0)))
    if d > tol:
        violations.append({"condition": "channel-conditional", "deficit": d})

    uu = q.marginal_array(("U", "Uh"))
    d = float(uu.sum() - np.trace(uu))
    if d > tol:
        violations.append({"condition": "lossless-decoder", "deficit": d})

    d = markov_deficit(q, "Y", ("X", "S"), "U")
    if d > tol:
        violations.append({"condition": "markov-Y-XS-U", "deficit": d})

    return DecompositionReport(not violations, violations)


# -- parametric example family ---------------------------------------------

def make_fig4_source(alpha: float) -> SourceStateModel:
    """Binary source/state pair with uniform marginals and correlation alpha:
    alpha = 0 gives independence, alpha = 1 gives U = S."""
    if not 0.0 <= alpha <= 1.0:
        raise ModelError(f"alpha must lie in [0, 1], got {alpha}")
    a, b = (1 + alpha) / 4, (1 - alpha) / 4
    return SourceStateModel.from_array([[a, b], [b, a]])


def make_fig3_channel(eps: float) -> ChannelLaw:
    """Ternary-input, ternary-output channel with binary state.

    Transcription used throughout this package (T[x][s] = row over y):

        x = 0:  (1-eps, eps,   0    )   both states
        x = 1:  (0,     1-eps, eps  )   both states
        x = 2:  (eps,   0,     1-eps)   s = 0
        x = 2:  (1-eps, eps,   0    )   s = 1

    With s = 0 this is the cyclic channel y = x + N mod 3, P(N = 1) = eps, for
    which the uniform input is capacity achieving.  With s = 1 the symbol
    x = 2 is stuck and reads like x = 0; that row is the only difference
    between the states.  At eps = 0 every row is a point mass.
    """
    if not 0.0 <= eps <= 0.5:
        raise ModelError(f"eps must lie in [0, 0.5], got {eps}")
    T = np.zeros((3, 2, 3))
    for s in range(2):
        for x in range(3):
            T[x, s, x] += 1 - eps
            T[x, s, (x + 1) % 3] += eps
    T[2, 1] = T[0, 1]
    return ChannelLaw.from_array(T)


def make_fig3_input_policy(p, n_u: int = 2) -> InputPolicy:
    """Q(x|s=0) = p[0:3], Q(x|s=1) = p[3:6], not depending on u."""
    p = np.asarray(p, dtype=float)
    if p.shape != (6,):
        raise ModelError("need six probabilities p0..p5")
    rows = p.reshape(2, 3)
    if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1) > PMF_TOL):
        raise ModelError("(p0,p1,p2) and (p3,p4,p5) must each be probability vectors")
    return InputPolicy.state_only(n_u, rows)


def source_is_diagonal(src: SourceStateModel, tol: float = PMF_TOL) -> bool:
    """U = S almost surely."""
    P = src.P_us.table
    return P.shape[0] == P.shape[1] and float(P.sum() - np.trace(P)) <= tol


def source_is_product(src: SourceStateModel, tol: float = PMF_TOL) -> bool:
    P = src.P_us.table
    return float(np.max(np.abs(P - np.outer(P.sum(1), P.sum(0))))) <= tol


def source_marginal_u(src: SourceStateModel) -> JointPMF:
    return marginalize(src.P_us, "U")
