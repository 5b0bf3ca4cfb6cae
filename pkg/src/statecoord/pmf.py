"""Dense probability tables over named finite alphabets and the usual
information measures on them (all in bits).

Variables are addressed by name.  A variable subset may be given as a single
name or as any iterable of names.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

PMF_TOL = 1e-9
INFO_TOL = 1e-9

VarSet = Union[str, Iterable[str]]


class AxisError(KeyError):
    """A variable name is not an axis of the table."""


class CompositionError(ValueError):
    """A chain of blocks/kernels cannot be composed."""


@dataclass(frozen=True)
class FiniteAlphabet:
    name: str
    size: int

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError(f"alphabet {self.name!r} must have size >= 1, got {self.size}")


def _as_names(vars: VarSet) -> tuple[str, ...]:
    if isinstance(vars, str):
        return (vars,)
    return tuple(vars)


def _check_unique(axes: Sequence[FiniteAlphabet]):
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate axis names in {names}")


class JointPMF:
    """A probability mass function over the cartesian product of ``axes``.

    ``table`` has one dimension per axis, in axis order.  Instances are treated
    as immutable; the table is stored read-only.
    """

    def __init__(self, axes: Sequence[FiniteAlphabet], table, *, validate: bool = True):
        self.axes = tuple(axes)
        _check_unique(self.axes)
        table = np.array(table, dtype=float)
        shape = tuple(a.size for a in self.axes)
        if table.shape != shape:
            raise ValueError(f"table shape {table.shape} does not match axes {shape}")
        if validate:
            if np.any(table < 0):
                raise ValueError("negative probability")
            total = table.sum()
            if abs(total - 1.0) > PMF_TOL:
                raise ValueError(f"probabilities sum to {total!r}, not 1")
        table.flags.writeable = False
        self.table = table

    @classmethod
    def from_array(cls, names: VarSet, table) -> "JointPMF":
        table = np.asarray(table, dtype=float)
        names = _as_names(names)
        return cls([FiniteAlphabet(n, s) for n, s in zip(names, table.shape)], table)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.table.shape

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise AxisError(f"no axis named {name!r} in {self.names}") from None

    def alphabet(self, name: str) -> FiniteAlphabet:
        return self.axes[self.axis(name)]

    def marginal_array(self, keep: VarSet) -> np.ndarray:
        """Marginal table over ``keep``, with dimensions in the order given."""
        keep = _as_names(keep)
        idx = [self.axis(n) for n in keep]
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        m = self.table.sum(axis=drop)
        # remaining dims are in original axis order; permute to requested order
        remaining = sorted(idx)
        return np.transpose(m, [remaining.index(i) for i in idx])

    def __repr__(self):
        return f"JointPMF({'x'.join(f'{a.name}[{a.size}]' for a in self.axes)})"


class ConditionalKernel:
    """A stochastic map P(out | given).

    ``table`` dimensions are the given axes followed by the output axes.  For
    every given-index the slice over the output axes sums to one.
    """

    def __init__(self, given: Sequence[FiniteAlphabet], out: Sequence[FiniteAlphabet], table,
                 *, validate: bool = True):
        self.given = tuple(given)
        self.out = tuple(out)
        if not self.out:
            raise ValueError("kernel needs at least one output axis")
        _check_unique(self.given + self.out)
        table = np.array(table, dtype=float)
        shape = tuple(a.size for a in self.given + self.out)
        if table.shape != shape:
            raise ValueError(f"kernel table shape {table.shape} does not match {shape}")
        if validate:
            if np.any(table < 0):
                raise ValueError("negative transition probability")
            sums = table.reshape(int(np.prod([a.size for a in self.given], dtype=int)), -1).sum(axis=1)
            if np.any(np.abs(sums - 1.0) > PMF_TOL):
                raise ValueError("kernel rows do not sum to 1")
        table.flags.writeable = False
        self.table = table

    @classmethod
    def from_array(cls, given: VarSet, out: VarSet, table) -> "ConditionalKernel":
        table = np.asarray(table, dtype=float)
        given, out = _as_names(given), _as_names(out)
        sizes = table.shape
        g = [FiniteAlphabet(n, s) for n, s in zip(given, sizes[:len(given)])]
        o = [FiniteAlphabet(n, s) for n, s in zip(out, sizes[len(given):])]
        return cls(g, o, table)

    @property
    def given_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.given)

    @property
    def out_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.out)

    def __repr__(self):
        return f"ConditionalKernel({','.join(self.out_names)} | {','.join(self.given_names)})"


def identity_kernel(source: FiniteAlphabet, name: str) -> ConditionalKernel:
    """The lossless map 1(out = in) from ``source`` to a copy called ``name``."""
    return ConditionalKernel([source], [FiniteAlphabet(name, source.size)], np.eye(source.size))


# -- information measures --------------------------------------------------

def _entropy_of(m: np.ndarray) -> float:
    m = m[m > 0]
    return float(-(m * np.log2(m)).sum())


def entropy(p: JointPMF, vars: VarSet) -> float:
    """Joint entropy H(vars) in bits; 0 log 0 = 0."""
    names = _as_names(vars)
    if not names:
        raise ValueError("entropy needs at least one variable")
    return _entropy_of(p.marginal_array(names))


def _joint_entropy_or_zero(p: JointPMF, names: tuple[str, ...]) -> float:
    return _entropy_of(p.marginal_array(names)) if names else 0.0


def _disjoint(*sets: tuple[str, ...]):
    seen: set[str] = set()
    for s in sets:
        if seen & set(s):
            raise ValueError(f"variable subsets overlap: {sets}")
        seen |= set(s)


def _clamp(v: float) -> float:
    return 0.0 if -INFO_TOL <= v < 0 else v


def mutual_information(p: JointPMF, a: VarSet, b: VarSet) -> float:
    a, b = _as_names(a), _as_names(b)
    if not a or not b:
        raise ValueError("mutual information needs two nonempty subsets")
    _disjoint(a, b)
    return _clamp(entropy(p, a) + entropy(p, b) - entropy(p, a + b))


def conditional_mutual_information(p: JointPMF, a: VarSet, b: VarSet, c: VarSet = ()) -> float:
    """I(a; b | c) = H(a,c) + H(b,c) - H(a,b,c) - H(c)."""
    a, b, c = _as_names(a), _as_names(b), _as_names(c)
    if not a or not b:
        raise ValueError("conditional mutual information needs nonempty a and b")
    _disjoint(a, b, c)
    for n in a + b + c:
        p.axis(n)
    h = _joint_entropy_or_zero
    return _clamp(h(p, a + c) + h(p, b + c) - h(p, a + b + c) - h(p, c))


def markov_deficit(p: JointPMF, a: VarSet, b: VarSet, c: VarSet) -> float:
    """I(a; c | b): zero exactly when a - b - c is a Markov chain."""
    return conditional_mutual_information(p, a, c, b)


def marginalize(p: JointPMF, keep: VarSet) -> JointPMF:
    keep = _as_names(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    return JointPMF([p.alphabet(n) for n in keep], p.marginal_array(keep), validate=False)


def variational_distance(p: JointPMF, q: JointPMF) -> float:
    if p.axes != q.axes:
        raise ValueError(f"axis mismatch: {p.axes} vs {q.axes}")
    return 0.5 * float(np.abs(p.table - q.table).sum())


def chain_compose(parts: Sequence[Union[JointPMF, ConditionalKernel]]) -> JointPMF:
    """Multiply blocks and kernels left to right into one joint PMF.

    Each kernel conditions on axes already introduced.  A JointPMF after the
    first part is treated as an independent block.
    """
    if not parts or not isinstance(parts[0], JointPMF):
        raise CompositionError("composition must start with a JointPMF")
    axes = list(parts[0].axes)
    table = np.asarray(parts[0].table)
    for part in parts[1:]:
        names = [a.name for a in axes]
        k = len(axes)
        if isinstance(part, JointPMF):
            new, given, ker = part.axes, (), part.table
        else:
            new, given, ker = part.out, part.given, part.table
        for g in given:
            if g.name not in names:
                raise CompositionError(f"kernel {part} conditions on {g.name!r}, which is not yet introduced")
            if axes[names.index(g.name)].size != g.size:
                raise CompositionError(f"size mismatch on {g.name!r}")
        for a in new:
            if a.name in names:
                raise CompositionError(f"axis {a.name!r} introduced twice")
        ker_idx = [names.index(g.name) for g in given] + list(range(k, k + len(new)))
        table = np.einsum(table, list(range(k)), ker, ker_idx, list(range(k + len(new))))
        axes.extend(new)
    return JointPMF(axes, table, validate=False)


# -- empirical distributions -----------------------------------------------

@dataclass(frozen=True)
class EmpiricalDistribution:
    axes: tuple[FiniteAlphabet, ...]
    counts: np.ndarray
    n: int

    @property
    def pmf(self) -> JointPMF:
        return JointPMF(self.axes, self.counts / self.n, validate=False)


def empirical_distribution(sequences: Sequence[Sequence[int]], axes: Sequence[FiniteAlphabet]) -> EmpiricalDistribution:
    """Joint type of equal-length symbol sequences (one sequence per axis)."""
    axes = tuple(axes)
    if len(sequences) != len(axes):
        raise ValueError("need one sequence per axis")
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    n = len(seqs[0])
    if n < 1 or any(len(s) != n for s in seqs):
        raise ValueError("sequences must share a common length n >= 1")
    for s, a in zip(seqs, axes):
        if s.min() < 0 or s.max() >= a.size:
            raise ValueError(f"symbol out of range for alphabet {a.name!r}")
    shape = tuple(a.size for a in axes)
    flat = np.ravel_multi_index(seqs, shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    return EmpiricalDistribution(axes, counts, n)


def is_robust_typical(e: EmpiricalDistribution, q: JointPMF, eps: float) -> bool:
    """True iff |pi(v) - q(v)| <= eps * q(v) for every joint symbol v."""
    if tuple(e.axes) != q.axes:
        raise ValueError("axis mismatch")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return robust_typical_array(e.counts / e.n, q.table, eps)


def robust_typical_array(pi: np.ndarray, q: np.ndarray, eps: float) -> bool:
    # the 1e-12 absorbs float error in counts/n
    return bool(np.all(np.abs(pi - q) <= eps * q + 1e-12))
