import json
import math

import numpy as np
import pytest

from oracles import bf_cmi, bf_entropy, bf_mi, nested_compose
from statecoord.models import ChannelLaw, InputPolicy, SourceStateModel, assemble_target
from statecoord.simulator import (
    Codebook,
    CodebookTooLarge,
    InfeasibleRates,
    RatePair,
    Scheme,
    SimConfig,
    choose_rates,
    codebook_sizes,
    decode,
    encode,
    enumerate_source_words,
    generate_codebook,
    run_monte_carlo,
    toy_model,
    transmit,
)


def binary_toy(q=0.15):
    """U ~ (0.9, 0.1) independent of a uniform S; noiseless binary Y = X.
    u = 1 sends 1, u = 0 sends Bernoulli(q); W = X.  Slack = h(0.1 + 0.9 q) - h(0.1)."""
    src = SourceStateModel.from_array(np.outer([0.9, 0.1], [0.5, 0.5]))
    Q = np.zeros((2, 2, 2))
    Q[0] = [1 - q, q]
    Q[1] = [0, 1]
    T = np.repeat(np.eye(2)[:, None, :], 2, axis=1)
    aux = np.zeros((2, 2, 2, 2))
    for x in range(2):
        aux[:, :, x, x] = 1
    return assemble_target(src, InputPolicy.from_array(Q), ChannelLaw.from_array(T)), aux


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


# -- rates -----------------------------------------------------------------

def test_choose_rates_binary_toy_rechecked_independently():
    tgt, aux = binary_toy()
    r = choose_rates(tgt, aux, 0.1)
    P, Q, T = (np.asarray(tgt.source.P_us.table), np.asarray(tgt.policy.Q.table),
               np.asarray(tgt.channel.T.table))
    J = nested_compose(P, Q, aux, T)
    U, S, W, Y = 0, 1, 3, 4
    H_U, I_WS, I_UWY = bf_entropy(J, [U]), bf_cmi(J, [W], [S], [U]), bf_mi(J, [U, W], [Y])
    assert I_UWY - I_WS - H_U == pytest.approx(h2(0.1 + 0.9 * 0.15) - h2(0.1), abs=1e-12)
    assert I_UWY - I_WS - H_U > 0.3
    assert r.R_M >= H_U + 0.1 - 1e-12
    assert r.R_L >= I_WS + 0.1 - 1e-12
    assert r.R_M + r.R_L <= I_UWY - 0.1 + 1e-12


def test_choose_rates_rejects_large_delta():
    tgt, aux = binary_toy()
    with pytest.raises(InfeasibleRates, match="I\\(U,W;Y\\)"):
        choose_rates(tgt, aux, 0.2)


def test_choose_rates_constant_w():
    # a constant W leaves I(U;Y) - H(U) <= 0 of slack, so the pair is rejected,
    # but the proposed R_L is delta alone
    tgt, _ = binary_toy()
    with pytest.raises(InfeasibleRates) as e:
        choose_rates(tgt, np.ones((2, 2, 2, 1)), 0.05)
    assert e.value.rates.R_L == pytest.approx(0.05, abs=1e-12)
    assert e.value.rates.I_WS_given_U == pytest.approx(0, abs=1e-12)


# -- codebook --------------------------------------------------------------

def test_codebook_sizes_and_n1():
    tgt, aux = binary_toy()
    sch = Scheme(tgt, aux)
    cb = generate_codebook(sch, 1, RatePair(1.0, 0.0, 0.1), np.random.default_rng(0))
    assert cb.u_words.shape == (2, 1) and cb.w_words.shape == (2, 1, 1)
    assert codebook_sizes(10, RatePair(0.55, 0.13, 0.1)) == (math.ceil(2 ** 5.5), math.ceil(2 ** 1.3))


def test_codebook_symbol_frequencies():
    tgt, aux = binary_toy()
    sch = Scheme(tgt, aux)
    cb = generate_codebook(sch, 14, RatePair(1.0, 0.0, 0.1), np.random.default_rng(7))
    N = cb.u_words.size
    f = (cb.u_words == 1).mean()
    assert abs(f - 0.1) <= 3 * math.sqrt(0.1 * 0.9 / N)
    # w-words follow Q(w|u)
    w_given_u0 = cb.w_words[:, 0, :][cb.u_words == 0]
    k = w_given_u0.size
    assert abs(w_given_u0.mean() - 0.15) <= 3 * math.sqrt(0.15 * 0.85 / k)
    assert np.all(cb.w_words[:, 0, :][cb.u_words == 1] == 1)


def test_codebook_determinism_and_cap():
    tgt, aux = toy_model()
    sch = Scheme(tgt, aux)
    rates = choose_rates(tgt, aux, 0.03)
    a = generate_codebook(sch, 8, rates, np.random.default_rng(3))
    b = generate_codebook(sch, 8, rates, np.random.default_rng(3))
    assert a.u_words.tobytes() == b.u_words.tobytes() and a.w_words.tobytes() == b.w_words.tobytes()
    with pytest.raises(CodebookTooLarge, match="cap"):
        generate_codebook(sch, 8, rates, np.random.default_rng(3), max_words=10)


def test_enumerated_source_words_are_most_probable_first():
    w = enumerate_source_words((1 / 3, 2 / 3), 4, 6)
    assert w.shape == (6, 4)
    assert tuple(w[0]) == (1, 1, 1, 1)
    assert all(row.sum() == 3 for row in w[1:5])
    assert len({tuple(r) for r in w}) == 6


# -- encoder, channel, decoder ---------------------------------------------

def _first_good_trial(sch, cb, n, eps):
    for seed in range(200):
        rng = np.random.default_rng(seed)
        flat = rng.choice(sch.P_us.size, size=n, p=sch.P_us.ravel())
        u, s = np.unravel_index(flat, sch.P_us.shape)
        enc = encode(cb, u, s, sch, eps, rng)
        if enc.ok:
            return u, s, enc, rng
    raise AssertionError("no successful encoding in 200 seeds")


def test_encode_decode_round_trip():
    tgt, aux = toy_model()
    sch = Scheme(tgt, aux)
    n = 12
    cb = generate_codebook(sch, n, choose_rates(tgt, aux, 0.03), np.random.default_rng(1),
                           source_words="enumerative")
    u, s, enc, rng = _first_good_trial(sch, cb, n, 0.2)
    np.testing.assert_array_equal(cb.u_words[enc.m], u)
    y = transmit(sch.T, enc.x, s, rng)
    dec = decode(cb, y, sch, 0.2)
    assert dec.ok and (dec.m, dec.l) == (enc.m, enc.l)
    np.testing.assert_array_equal(dec.u_hat, u)


def test_encode_flags_source_miss():
    tgt, aux = toy_model()
    sch = Scheme(tgt, aux)
    cb = Codebook(np.zeros((3, 4), dtype=np.int64), np.zeros((3, 1, 4), dtype=np.int64))
    enc = encode(cb, np.array([1, 1, 1, 1]), np.array([1, 1, 1, 1]), sch, 0.2, np.random.default_rng(0))
    assert enc.source_miss and not enc.ok and enc.m == 0


def test_covering_with_constant_w():
    tgt, _ = binary_toy()
    sch = Scheme(tgt, np.ones((2, 2, 2, 1)))
    n = 20
    u = np.array([0] * 18 + [1, 1])
    s = np.array([0, 1] * 10)    # joint type of (u, s) equals P_us exactly
    cb = Codebook(u[None, :], np.zeros((1, 1, n), dtype=np.int64))
    enc = encode(cb, u, s, sch, 0.5, np.random.default_rng(0))
    assert enc.ok and (enc.m, enc.l) == (0, 0)


def test_transmit_examples():
    rng = np.random.default_rng(5)
    x = rng.integers(0, 3, size=50)
    s = rng.integers(0, 2, size=50)
    T = np.repeat(np.eye(3)[:, None, :], 2, axis=1)
    np.testing.assert_array_equal(transmit(T, x, s, rng), x)
    T2 = np.zeros((3, 2, 3))
    for xx in range(3):
        for ss in range(2):
            T2[xx, ss, (xx + ss) % 3] = 1
    np.testing.assert_array_equal(transmit(T2, x, s, rng), (x + s) % 3)
    p = 0.2
    bsc = np.repeat(np.array([[1 - p, p], [p, 1 - p]])[:, None, :], 1, axis=1)
    N = 20000
    x = rng.integers(0, 2, size=N)
    y = transmit(bsc, x, np.zeros(N, dtype=int), rng)
    assert abs((x != y).mean() - p) <= 3 * math.sqrt(p * (1 - p) / N)


def test_decode_single_word_and_ambiguity():
    tgt, aux = binary_toy()
    sch = Scheme(tgt, aux)
    u = np.array([0] * 9 + [1])
    w = np.array([0] * 7 + [1] * 3)   # x = 1 for u = 1 and 2 of the u = 0 slots
    y = w.copy()
    cb = Codebook(u[None, :], w[None, None, :])
    dec = decode(cb, y, sch, 0.5)
    assert dec.ok and (dec.m, dec.l) == (0, 0)
    cb2 = Codebook(np.stack([u, u]), np.stack([w[None, :], w[None, :]]))
    dec = decode(cb2, y, sch, 0.5)
    assert dec.ambiguous and not dec.ok


# -- Monte Carlo -----------------------------------------------------------

def test_sim_config_validation():
    tgt, aux = toy_model()
    with pytest.raises(ValueError):
        SimConfig(tgt, aux, 8, 0)
    with pytest.raises(ValueError):
        SimConfig(tgt, aux, 0, 5)
    with pytest.raises(ValueError):
        SimConfig(tgt, aux, 8, 5, eps_typ=0)


def test_monte_carlo_determinism_and_threads():
    tgt, aux = toy_model()
    cfg = SimConfig(tgt, aux, 10, 40, seed=11, source_words="enumerative")
    a = run_monte_carlo(cfg).to_json()
    assert a == run_monte_carlo(cfg).to_json()
    par = SimConfig(tgt, aux, 10, 40, seed=11, source_words="enumerative", workers=4)
    assert a == run_monte_carlo(par).to_json()
    fixed = SimConfig(tgt, aux, 10, 20, seed=11, fixed_codebook=True)
    assert run_monte_carlo(fixed).to_json() == run_monte_carlo(fixed).to_json()


def test_report_accounting():
    tgt, aux = toy_model()
    rep = run_monte_carlo(SimConfig(tgt, aux, 12, 60, seed=2, source_words="enumerative"))
    d = json.loads(rep.to_json())
    for k in ("config", "n", "trials", "p_coord_fail", "p_lossless_fail", "ci95", "events"):
        assert k in d
    assert 0 <= rep.p_coord_fail <= 1 and 0 <= rep.p_lossless_fail <= 1
    assert rep.p_total == pytest.approx(rep.p_coord_fail + rep.p_lossless_fail)
    for lo_hi, p in ((rep.ci95["coord"], rep.p_coord_fail), (rep.ci95["lossless"], rep.p_lossless_fail)):
        assert lo_hi[0] <= p <= lo_hi[1]
    # a decoding miss always costs the lossless term
    assert rep.p_lossless_fail >= rep.events["decode_miss"]
    assert rep.typical_given_success is None or rep.typical_given_success >= 0.95


def test_negative_control_does_not_decode():
    tgt, aux = toy_model("constant")
    rates = choose_rates(*toy_model(), 0.03)
    with pytest.raises(InfeasibleRates):
        choose_rates(tgt, aux, 0.03)
    for n in (8, 12):
        rep = run_monte_carlo(SimConfig(tgt, aux, n, 40, rates=rates, source_words="enumerative"))
        assert rep.p_lossless_fail >= 0.9
