import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import bf_cmi, bf_entropy, bf_mi
from statecoord.models import make_fig4_source
from statecoord.pmf import (
    AxisError,
    CompositionError,
    ConditionalKernel,
    FiniteAlphabet,
    JointPMF,
    chain_compose,
    conditional_mutual_information,
    empirical_distribution,
    entropy,
    identity_kernel,
    is_robust_typical,
    markov_deficit,
    marginalize,
    mutual_information,
    variational_distance,
)


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def random_joint(rng, shape, names="ABCD"):
    t = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    # sprinkle exact zeros so 0 log 0 gets exercised
    t[rng.random(shape) < 0.15] = 0
    t /= t.sum()
    return JointPMF.from_array(tuple(names[:len(shape)]), t)


@st.composite
def joints(draw, min_vars=1, max_vars=4):
    k = draw(st.integers(min_vars, max_vars))
    shape = tuple(draw(st.integers(1, 4)) for _ in range(k))
    w = draw(arrays(np.float64, shape, elements=st.floats(0, 1)))
    if w.sum() <= 0:
        w = np.ones(shape)
    return JointPMF.from_array(tuple("ABCD"[:k]), w / w.sum())


# -- types ---------------------------------------------------------------

def test_alphabet_size_must_be_positive():
    with pytest.raises(ValueError):
        FiniteAlphabet("U", 0)


def test_joint_rejects_bad_tables():
    with pytest.raises(ValueError):
        JointPMF.from_array("A", [0.5, 0.6])
    with pytest.raises(ValueError):
        JointPMF.from_array("A", [1.2, -0.2])
    with pytest.raises(ValueError):
        JointPMF([FiniteAlphabet("A", 2), FiniteAlphabet("A", 2)], np.full((2, 2), 0.25))


def test_kernel_rows_must_sum_to_one():
    with pytest.raises(ValueError):
        ConditionalKernel.from_array("X", "Y", [[0.5, 0.4], [0.5, 0.5]])


# -- entropy -------------------------------------------------------------

def test_entropy_examples():
    assert entropy(JointPMF.from_array("U", [0.5, 0.5]), "U") == pytest.approx(1.0, abs=1e-15)
    assert entropy(JointPMF.from_array("U", [0, 1, 0]), "U") == 0.0
    p = make_fig4_source(0.5).P_us
    expected = -sum(v * math.log2(v) for v in (0.375, 0.125, 0.125, 0.375))
    assert entropy(p, ("U", "S")) == pytest.approx(expected, abs=1e-12)


def test_entropy_unknown_axis():
    with pytest.raises(AxisError):
        entropy(JointPMF.from_array("U", [0.5, 0.5]), "Q")


def test_mutual_information_fig4_endpoints():
    assert mutual_information(make_fig4_source(0.0).P_us, "U", "S") == pytest.approx(0, abs=1e-12)
    assert mutual_information(make_fig4_source(1.0).P_us, "U", "S") == pytest.approx(1, abs=1e-12)
    assert mutual_information(make_fig4_source(0.5).P_us, "U", "S") == pytest.approx(1 - h2(0.75), abs=1e-12)


def test_overlapping_subsets_rejected():
    p = JointPMF.from_array(("A", "B"), np.full((2, 2), 0.25))
    with pytest.raises(ValueError):
        mutual_information(p, "A", ("A", "B"))
    with pytest.raises(ValueError):
        conditional_mutual_information(p, "A", "B", "A")


def test_cmi_examples(rng):
    p = random_joint(rng, (3, 2, 4))
    assert conditional_mutual_information(p, "A", "B") == pytest.approx(mutual_information(p, "A", "B"), abs=1e-15)
    # B a function of C
    t = np.zeros((2, 2, 4))
    for a in range(2):
        for c in range(4):
            t[a, c % 2, c] = rng.random()
    p = JointPMF.from_array(("A", "B", "C"), t / t.sum())
    assert conditional_mutual_information(p, "A", "B", "C") == pytest.approx(0, abs=1e-12)
    p = random_joint(rng, (2, 2, 2))
    assert conditional_mutual_information(p, "A", "B", "C") == pytest.approx(
        bf_cmi(p.table, [0], [1], [2]), abs=1e-12)


@given(joints())
def test_information_measures_match_bruteforce(p):
    k = len(p.names)
    t = p.table
    for r in range(k):
        assert entropy(p, p.names[r]) == pytest.approx(bf_entropy(t, [r]), abs=1e-12)
    assert entropy(p, p.names) == pytest.approx(bf_entropy(t, list(range(k))), abs=1e-12)
    if k >= 2:
        assert mutual_information(p, p.names[0], p.names[1:]) == pytest.approx(
            max(bf_mi(t, [0], list(range(1, k))), 0), abs=1e-12)
    if k >= 3:
        assert conditional_mutual_information(p, p.names[0], p.names[1], p.names[2:]) == pytest.approx(
            max(bf_cmi(t, [0], [1], list(range(2, k))), 0), abs=1e-12)


@given(joints(min_vars=3, max_vars=4))
def test_nonnegativity_and_chain_rule(p):
    A, B, C = p.names[0], p.names[1], p.names[2:]
    assert mutual_information(p, A, B) >= 0
    assert conditional_mutual_information(p, A, B, C) >= 0
    lhs = mutual_information(p, (A, B), C)
    rhs = mutual_information(p, A, C) + conditional_mutual_information(p, B, C, A)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@given(joints())
def test_entropy_bound(p):
    for i, n in enumerate(p.names):
        assert -1e-12 <= entropy(p, n) <= math.log2(p.shape[i]) + 1e-12
    assert entropy(p, p.names) <= sum(math.log2(s) for s in p.shape) + 1e-12


# -- marginals, composition ------------------------------------------------

def test_marginalize_examples(rng):
    for a in np.linspace(0, 1, 11):
        np.testing.assert_allclose(marginalize(make_fig4_source(a).P_us, "U").table, [0.5, 0.5], atol=1e-15)
    p = random_joint(rng, (2, 3))
    np.testing.assert_array_equal(marginalize(p, ("A", "B")).table, p.table)
    f, g = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))
    prod = JointPMF.from_array(("A", "B"), np.outer(f, g))
    np.testing.assert_allclose(marginalize(prod, "B").table, g, atol=1e-15)


def test_marginal_array_respects_requested_order(rng):
    p = random_joint(rng, (2, 3, 4))
    np.testing.assert_allclose(p.marginal_array(("C", "A")), p.table.sum(axis=1).T)


def test_chain_compose_examples(rng):
    P = make_fig4_source(0.3).P_us
    J = chain_compose([P, identity_kernel(P.alphabet("U"), "Uh")])
    assert J.names == ("U", "S", "Uh")
    assert J.table[0, :, 1].sum() == 0 and J.table[1, :, 0].sum() == 0

    P0 = make_fig4_source(0.0).P_us
    Q = ConditionalKernel.from_array(("U", "S"), "X", rng.dirichlet(np.ones(2), size=(2, 2)))
    T = ConditionalKernel.from_array(("X", "S"), "Y", rng.dirichlet(np.ones(2), size=(2, 2)))
    J = chain_compose([P0, Q, T])
    np.testing.assert_allclose(J.marginal_array(("U", "S")), P0.table, atol=1e-15)
    assert markov_deficit(J, "Y", ("X", "S"), "U") <= 1e-9


def test_chain_compose_matches_nested_loops(rng):
    P = rng.dirichlet(np.ones(4)).reshape(2, 2)
    Q = rng.dirichlet(np.ones(2), size=(2, 2))
    T = rng.dirichlet(np.ones(2), size=(2, 2))
    J = chain_compose([JointPMF.from_array(("U", "S"), P), ConditionalKernel.from_array(("U", "S"), "X", Q),
                       ConditionalKernel.from_array(("X", "S"), "Y", T),
                       identity_kernel(FiniteAlphabet("U", 2), "Uh")])
    ref = np.zeros((2,) * 5)
    for u in range(2):
        for s in range(2):
            for x in range(2):
                for y in range(2):
                    ref[u, s, x, y, u] = P[u, s] * Q[u, s, x] * T[x, s, y]
    np.testing.assert_allclose(J.table, ref, atol=1e-12, rtol=0)


def test_chain_compose_errors():
    P = JointPMF.from_array(("U", "S"), np.full((2, 2), 0.25))
    with pytest.raises(CompositionError):
        chain_compose([P, ConditionalKernel.from_array("X", "Y", np.eye(2))])
    with pytest.raises(CompositionError):
        chain_compose([P, ConditionalKernel.from_array("U", "S", np.eye(2))])


def test_markov_deficit_identity(rng):
    p = random_joint(rng, (2, 3, 2))
    assert markov_deficit(p, "A", "B", "C") == conditional_mutual_information(p, "A", "C", "B")
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = t[1, 1, 1] = 0.5
    assert markov_deficit(JointPMF.from_array(("A", "B", "C"), t), "A", "B", "C") == pytest.approx(0, abs=1e-12)


# -- distances, types, typicality -------------------------------------------

def test_variational_distance_examples():
    a = JointPMF.from_array("A", [1, 0])
    b = JointPMF.from_array("A", [0, 1])
    assert variational_distance(a, a) == 0
    assert variational_distance(a, b) == 1.0
    assert variational_distance(JointPMF.from_array("A", [0.75, 0.25]),
                                JointPMF.from_array("A", [0.5, 0.5])) == 0.25
    with pytest.raises(ValueError):
        variational_distance(a, JointPMF.from_array("B", [1, 0]))


@given(st.integers(0, 2 ** 32 - 1))
def test_variational_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    p, q, r = (JointPMF.from_array(("A", "B"), rng.dirichlet(np.ones(6)).reshape(2, 3)) for _ in range(3))
    assert variational_distance(p, q) == variational_distance(q, p)
    assert variational_distance(p, r) <= variational_distance(p, q) + variational_distance(q, r) + 1e-12
    assert 0 <= variational_distance(p, q) <= 1


def test_empirical_distribution_examples():
    U, S = FiniteAlphabet("U", 2), FiniteAlphabet("S", 2)
    e = empirical_distribution([(0, 0, 1, 1)], [U])
    np.testing.assert_array_equal(e.pmf.table, [0.5, 0.5])
    e = empirical_distribution([(1, 1, 1)], [U])
    np.testing.assert_array_equal(e.pmf.table, [0, 1])
    e = empirical_distribution([(0, 1, 0), (1, 1, 0)], [U, S])
    np.testing.assert_array_equal(e.counts, [[1, 1], [0, 1]])
    assert e.counts.sum() == e.n == 3


def test_empirical_distribution_errors():
    U = FiniteAlphabet("U", 2)
    with pytest.raises(ValueError):
        empirical_distribution([(0, 2)], [U])
    with pytest.raises(ValueError):
        empirical_distribution([(0, 1), (0,)], [U, FiniteAlphabet("S", 2)])


def test_robust_typicality_examples():
    A = FiniteAlphabet("A", 2)
    q = JointPMF([A], [0.5, 0.5])
    assert is_robust_typical(empirical_distribution([(0, 1)], [A]), q, 1e-6)
    e = empirical_distribution([(0,) * 6 + (1,) * 4], [A])
    assert is_robust_typical(e, q, 0.25)
    assert not is_robust_typical(e, q, 0.1)
    q0 = JointPMF([A], [1.0, 0.0])
    assert not is_robust_typical(empirical_distribution([(0, 1)], [A]), q0, 10.0)
