"""Monte-Carlo simulation of the random-coding scheme with non-causal state
and source knowledge at the encoder.

Per trial: draw (U^n, S^n) i.i.d., find the source index m, cover (U^n, S^n)
with an auxiliary word w^n(m, l), draw X^n symbol-wise from Q(x|w,u,s), send
it through the channel, decode by joint typicality, and score both terms of
the error probability: coordination (variational distance of the joint type
of (u, s, x, y, uhat) to the target) and lossless decoding.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.stats import binomtest

from .constraints import scheme_joint
from .models import (
    ChannelLaw,
    InputPolicy,
    SourceStateModel,
    TargetDistribution,
    assemble_target,
)
from .pmf import (
    JointPMF,
    conditional_mutual_information,
    empirical_distribution,
    entropy,
    mutual_information,
    variational_distance,
    robust_typical_array,
)

MAX_WORDS = 2 ** 24


class InfeasibleRates(ValueError):
    """No rate pair satisfies the covering and packing conditions.

    ``rates`` holds the rejected pair for reporting."""

    def __init__(self, message, rates=None):
        super().__init__(message)
        self.rates = rates


class CodebookTooLarge(MemoryError):
    pass


@dataclass(frozen=True)
class RatePair:
    R_M: float
    R_L: float
    delta: float
    H_U: float = float("nan")
    I_WS_given_U: float = float("nan")
    I_UW_Y: float = float("nan")


def _aux_array(aux) -> np.ndarray:
    return np.asarray(getattr(aux, "table", aux), dtype=float)


def choose_rates(target: TargetDistribution, aux, delta: float) -> RatePair:
    """R_M = H(U) + delta and R_L = I(W;S|U) + delta, provided that
    R_M + R_L <= I(U,W;Y) - delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    p = scheme_joint(target.source, target.policy, target.channel, _aux_array(aux))
    h_u = entropy(p, "U")
    i_ws = conditional_mutual_information(p, "W", "S", "U")
    i_uwy = mutual_information(p, ("U", "W"), "Y")
    r_m, r_l = h_u + delta, i_ws + delta
    rates = RatePair(r_m, r_l, delta, h_u, i_ws, i_uwy)
    if r_m + r_l > i_uwy - delta:
        raise InfeasibleRates(
            f"R_M + R_L <= I(U,W;Y) - delta fails: {r_m:.6g} + {r_l:.6g} > {i_uwy:.6g} - {delta:.6g}; "
            f"slack I(U,W;Y) - I(W;S|U) - H(U) = {i_uwy - i_ws - h_u:.6g} bits needs to be >= 2*delta",
            rates)
    return rates


# -- the scheme's distributions ---------------------------------------------

class Scheme:
    """All conditional laws the encoder and decoder need, derived from the
    joint P_us Q(x|u,s) Q(w|u,s,x) T(y|x,s)."""

    def __init__(self, target: TargetDistribution, aux):
        self.target = target
        aux = _aux_array(aux)
        p = scheme_joint(target.source, target.policy, target.channel, aux)
        J = np.asarray(p.table)  # [u][s][x][w][y]
        self.nu, self.ns, self.nx, self.nw, self.ny = J.shape
        self.P_us = np.asarray(target.source.P_us.table)
        self.P_u = self.P_us.sum(axis=1)
        uw = J.sum(axis=(1, 2, 4))
        self.Q_w_u = _conditional(uw, self.nw)                  # [u][w]
        wusx = np.transpose(J.sum(axis=4), (3, 0, 1, 2))           # [w][u][s][x]
        self.Q_x_wus = _conditional(wusx, self.nx)              # [w][u][s][x]
        self.T = np.asarray(target.channel.T.table)                # [x][s][y]
        self.q_usw = J.sum(axis=(2, 4))                            # covering check
        self.q_uwy = J.sum(axis=(1, 2))                            # decoding check
        self.q_target = np.asarray(target.joint.table)             # [u][s][x][y][uh]
        self.target_pmf = target.joint


def _conditional(table: np.ndarray, k: int) -> np.ndarray:
    tot = table.sum(axis=-1, keepdims=True)
    return np.divide(table, tot, out=np.full(table.shape, 1.0 / k), where=tot > 0)


def _draw(cum: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of a cumulative table (last axis)."""
    r = rng.random(cum.shape[:-1])
    out = np.zeros(r.shape, dtype=np.int64)
    for k in range(cum.shape[-1] - 1):
        out += r >= cum[..., k]
    return out


def _typical_rows(idx: np.ndarray, q_flat: np.ndarray, eps: float) -> np.ndarray:
    """Robust typicality of each row of joint-symbol indices against q."""
    rows, n = idx.shape
    cells = q_flat.size
    offs = (np.arange(rows, dtype=np.int64) * cells)[:, None]
    counts = np.bincount((idx + offs).ravel(), minlength=rows * cells).reshape(rows, cells)
    return np.all(np.abs(counts / n - q_flat) <= eps * q_flat + 1e-12, axis=1)


# -- codebook ----------------------------------------------------------------

@dataclass
class Codebook:
    u_words: np.ndarray   # (M, n)
    w_words: np.ndarray   # (M, L, n)

    @property
    def M(self) -> int:
        return self.u_words.shape[0]

    @property
    def L(self) -> int:
        return self.w_words.shape[1]


def codebook_sizes(n: int, rates: RatePair) -> tuple[int, int]:
    return math.ceil(2.0 ** (n * rates.R_M)), math.ceil(2.0 ** (n * rates.R_L))


def _sequences_of_type(counts: list, n: int):
    """All sequences with the given symbol counts, in lexicographic order."""
    seq = [0] * n

    def rec(pos):
        if pos == n:
            yield tuple(seq)
            return
        for a, c in enumerate(counts):
            if c:
                counts[a] -= 1
                seq[pos] = a
                yield from rec(pos + 1)
                counts[a] += 1

    yield from rec(0)


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


@lru_cache(maxsize=32)
def enumerate_source_words(P_u: tuple, n: int, M: int) -> np.ndarray:
    """The min(M, |U|^n) most probable source sequences, grouped by type
    (most probable type first, lexicographic inside a type)."""
    P_u = np.asarray(P_u)
    logp = np.log(np.maximum(P_u, 1e-300))
    types = [c for c in _compositions(n, len(P_u))
             if all(P_u[a] > 0 or c[a] == 0 for a in range(len(P_u)))]
    types.sort(key=lambda c: (-float(np.dot(c, logp)), tuple(-x for x in c)))
    words = []
    for c in types:
        for s in _sequences_of_type(list(c), n):
            words.append(s)
            if len(words) >= M:
                return np.array(words, dtype=np.int64)
    return np.array(words, dtype=np.int64).reshape(-1, n)


def generate_codebook(scheme: Scheme, n: int, rates: RatePair, rng: np.random.Generator, *,
                      source_words: str = "random", max_words: int = MAX_WORDS) -> Codebook:
    """u-words i.i.d. from P_U (or the enumerated most probable sequences),
    and for each u-word, L w-words drawn symbol-wise from Q(w|u)."""
    M, L = codebook_sizes(n, rates)
    if M * L > max_words:
        raise CodebookTooLarge(
            f"codebook needs |M|*|M_L| = {M}*{L} = {M * L} words of length {n}, cap is {max_words}")
    if source_words == "random":
        u = _draw(np.broadcast_to(np.cumsum(scheme.P_u), (M, n, scheme.nu)), rng)
    elif source_words == "enumerative":
        u = enumerate_source_words(tuple(float(x) for x in scheme.P_u), n, M)
    else:
        raise ValueError(f"unknown source_words mode {source_words!r}")
    cum_w = np.cumsum(scheme.Q_w_u, axis=1)[u]                   # (M, n, W)
    w = _draw(np.broadcast_to(cum_w[:, None], (u.shape[0], L, n, scheme.nw)), rng)
    return Codebook(np.asarray(u, dtype=np.int64), w)


# -- encoder / channel / decoder ---------------------------------------------

@dataclass
class EncodeResult:
    x: np.ndarray
    m: int
    l: int
    source_miss: bool = False
    covering_fail: bool = False

    @property
    def ok(self) -> bool:
        return not (self.source_miss or self.covering_fail)


def encode(cb: Codebook, u_seq, s_seq, scheme: Scheme, eps_typ: float,
           rng: np.random.Generator) -> EncodeResult:
    """Exact source lookup, then the first jointly typical w-word.

    A failed search falls back to index 0 so that a channel input is always
    produced; the failure is flagged.
    """
    u_seq, s_seq = np.asarray(u_seq), np.asarray(s_seq)
    hits = np.flatnonzero(np.all(cb.u_words == u_seq, axis=1))
    source_miss = hits.size == 0
    m = 0 if source_miss else int(hits[0])

    idx = (u_seq * scheme.ns + s_seq)[None, :] * scheme.nw + cb.w_words[m]
    typ = _typical_rows(idx, scheme.q_usw.ravel(), eps_typ)
    hits = np.flatnonzero(typ)
    covering_fail = hits.size == 0
    l = 0 if covering_fail else int(hits[0])

    w = cb.w_words[m, l]
    uu = cb.u_words[m]
    cum = np.cumsum(scheme.Q_x_wus[w, uu, s_seq], axis=1)
    x = _draw(cum, rng)
    return EncodeResult(x, m, l, source_miss, covering_fail)


def transmit(T: np.ndarray, x_seq, s_seq, rng: np.random.Generator) -> np.ndarray:
    """Memoryless channel: y_i ~ T(.|x_i, s_i)."""
    T = np.asarray(getattr(T, "table", T))
    cum = np.cumsum(T[np.asarray(x_seq), np.asarray(s_seq)], axis=1)
    return _draw(cum, rng)


@dataclass
class DecodeResult:
    m: int
    l: int
    u_hat: np.ndarray
    miss: bool = False
    ambiguous: bool = False

    @property
    def ok(self) -> bool:
        return not (self.miss or self.ambiguous)


def decode(cb: Codebook, y_seq, scheme: Scheme, eps_typ: float) -> DecodeResult:
    """Unique (m, l) whose (u-word, w-word) is jointly typical with y^n.

    No hit or several hits are failures; the output then defaults to u-word 0.
    """
    y_seq = np.asarray(y_seq)
    M, L, n = cb.w_words.shape
    # joint typicality implies typicality of each marginal: prune by u-word first
    q_u = scheme.q_uwy.sum(axis=(1, 2))
    cand = np.flatnonzero(_typical_rows(cb.u_words, q_u, eps_typ))
    idx = ((cb.u_words[cand, None, :] * scheme.nw + cb.w_words[cand]) * scheme.ny + y_seq)
    typ = _typical_rows(idx.reshape(-1, n), scheme.q_uwy.ravel(), eps_typ)
    hits = np.flatnonzero(typ)
    if hits.size == 1:
        j, l = divmod(int(hits[0]), L)
        m = int(cand[j])
        return DecodeResult(m, l, cb.u_words[m].copy())
    return DecodeResult(-1, -1, cb.u_words[0].copy(), miss=hits.size == 0, ambiguous=hits.size > 1)


# -- Monte-Carlo driver --------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    target: TargetDistribution
    aux: np.ndarray
    n: int
    trials: int
    eps_typ: float = 0.2
    delta: float = 0.03
    seed: int = 0
    fixed_codebook: bool = False
    source_words: str = "random"   # or "enumerative"
    rates: Optional[RatePair] = None  # override; skips the feasibility check
    max_words: int = MAX_WORDS
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("block length n must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.eps_typ <= 0:
            raise ValueError("eps_typ must be positive")

    def echo(self) -> dict:
        return {"n": self.n, "trials": self.trials, "eps_typ": self.eps_typ, "delta": self.delta,
                "seed": self.seed, "fixed_codebook": self.fixed_codebook,
                "source_words": self.source_words}


@dataclass
class TrialOutcome:
    source_miss: bool
    covering_fail: bool
    decode_miss: bool
    decode_ambiguous: bool
    lossless_fail: bool
    coord_fail: bool
    vd: float
    typical: bool


@dataclass
class SimReport:
    config: dict
    n: int
    trials: int
    rates: dict
    codebook: dict
    p_coord_fail: float
    p_lossless_fail: float
    p_total: float
    ci95: dict
    events: dict
    mean_variational_distance: float
    typical_given_success: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _rng(seed: int, key: tuple) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def run_trial(scheme: Scheme, cb: Codebook, cfg: SimConfig, rng: np.random.Generator) -> TrialOutcome:
    n = cfg.n
    flat = rng.choice(scheme.P_us.size, size=n, p=scheme.P_us.ravel())
    u, s = np.unravel_index(flat, scheme.P_us.shape)
    enc = encode(cb, u, s, scheme, cfg.eps_typ, rng)
    y = transmit(scheme.T, enc.x, s, rng)
    dec = decode(cb, y, scheme, cfg.eps_typ)
    lossless_fail = (not dec.ok) or bool(np.any(dec.u_hat != u))
    emp = empirical_distribution((u, s, enc.x, y, dec.u_hat), scheme.target_pmf.axes)
    vd = variational_distance(emp.pmf, scheme.target_pmf)
    typical = robust_typical_array(emp.counts / n, scheme.q_target, cfg.eps_typ)
    return TrialOutcome(enc.source_miss, enc.covering_fail, dec.miss, dec.ambiguous,
                        lossless_fail, vd >= cfg.eps_typ, vd, typical)


def _ci(k: int, n: int) -> list:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return [float(ci.low), float(ci.high)]


def run_monte_carlo(cfg: SimConfig) -> SimReport:
    """Estimate both error terms over ``cfg.trials`` independent trials.

    Trial ``i`` uses the random stream seeded by ``(seed, i)``; the fixed
    codebook, when requested, uses the stream of ``seed`` alone.
    """
    rates = cfg.rates if cfg.rates is not None else choose_rates(cfg.target, cfg.aux, cfg.delta)
    scheme = Scheme(cfg.target, cfg.aux)
    fixed = None
    if cfg.fixed_codebook:
        fixed = generate_codebook(scheme, cfg.n, rates, _rng(cfg.seed, ()),
                                  source_words=cfg.source_words, max_words=cfg.max_words)

    def one(i):
        rng = _rng(cfg.seed, (i,))
        cb = fixed if fixed is not None else generate_codebook(
            scheme, cfg.n, rates, rng, source_words=cfg.source_words, max_words=cfg.max_words)
        return run_trial(scheme, cb, cfg, rng), (cb.M, cb.L)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(one, range(cfg.trials)))
    else:
        results = [one(i) for i in range(cfg.trials)]
    outcomes = [r[0] for r in results]
    M, L = results[0][1]

    t = cfg.trials
    k_coord = sum(o.coord_fail for o in outcomes)
    k_loss = sum(o.lossless_fail for o in outcomes)
    ok = [o for o in outcomes
          if not (o.source_miss or o.covering_fail or o.lossless_fail)]
    return SimReport(
        config=cfg.echo(),
        n=cfg.n,
        trials=t,
        rates={"R_M": rates.R_M, "R_L": rates.R_L, "delta": rates.delta, "H_U": rates.H_U,
               "I_WS_given_U": rates.I_WS_given_U, "I_UW_Y": rates.I_UW_Y},
        codebook={"M": M, "M_L": L},
        p_coord_fail=k_coord / t,
        p_lossless_fail=k_loss / t,
        p_total=(k_coord + k_loss) / t,
        ci95={"coord": _ci(k_coord, t), "lossless": _ci(k_loss, t)},
        events={
            "source_miss": sum(o.source_miss for o in outcomes) / t,
            "covering_fail": sum(o.covering_fail for o in outcomes) / t,
            "decode_miss": sum(o.decode_miss for o in outcomes) / t,
            "decode_ambiguous": sum(o.decode_ambiguous for o in outcomes) / t,
        },
        mean_variational_distance=float(np.mean([o.vd for o in outcomes])),
        typical_given_success=(sum(o.typical for o in ok) / len(ok)) if ok else None,
    )


# -- built-in toy models ---------------------------------------------------------

TOY_P_U = (1 / 3, 2 / 3)


def toy_model(channel: str = "precoded"):
    """A small scheme with 0.667 bits of slack, and its aux kernel.

    U ~ (1/3, 2/3) and S = U.  X, Y are ternary.  In state 0 the channel is
    the identity; in state 1 it swaps symbols 0 and 2.  The encoder sends 0
    when u = 0 and otherwise a uniform choice of the two inputs that land on
    outputs {1, 2}; the auxiliary W is the intended output symbol.

    ``channel="constant"`` replaces the channel by Y = 0 (no capacity), for
    negative controls; the policy and aux stay the same.
    """
    a, b = TOY_P_U
    src = SourceStateModel.from_array([[a, 0.0], [0.0, b]])
    perm = [np.arange(3), np.array([2, 1, 0])]   # y = perm[s][x]
    T = np.zeros((3, 2, 3))
    for s in range(2):
        for x in range(3):
            T[x, s, perm[s][x]] = 1.0
    if channel == "constant":
        T = np.zeros((3, 2, 3))
        T[:, :, 0] = 1.0
    elif channel != "precoded":
        raise ValueError(channel)
    Q = np.full((2, 2, 3), 1 / 3)
    Q[0, 0] = [1, 0, 0]
    Q[1, 1] = [0.5, 0.5, 0]  # outputs 2 and 1 under the swap
    aux = np.zeros((2, 2, 3, 3))
    for u in range(2):
        for s in range(2):
            for x in range(3):
                aux[u, s, x, perm[s][x]] = 1.0
    target = assemble_target(src, InputPolicy.from_array(Q), ChannelLaw.from_array(T))
    return target, aux

