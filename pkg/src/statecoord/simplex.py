"""Multi-start ascent over products of probability simplices.

The variable is an array whose last axis is a probability vector.  Each
restart optimizes softmax logits with L-BFGS; the result is compared with
its rounding to the nearest vertex and with any warm start, and the best of
these is kept.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

LN2 = np.log(2.0)

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


def softmax(theta: np.ndarray) -> np.ndarray:
    z = theta - theta.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def entropy_terms(J: np.ndarray, labels: str, terms: Sequence[tuple[float, str]]):
    """Value and gradient of sum(coef * H(subset)) for a joint tensor ``J``.

    ``labels`` names the axes of ``J`` with one character each; every subset
    is a string of those characters.  Empty subsets contribute nothing.
    """
    value = 0.0
    grad = np.zeros_like(J)
    for coef, sub in terms:
        if not sub or coef == 0:
            continue
        drop = tuple(i for i, c in enumerate(labels) if c not in sub)
        m = J.sum(axis=drop, keepdims=True)
        logm = np.log2(np.maximum(m, 1e-300))
        value += coef * float(-(m * logm).sum())
        grad += coef * (-logm - 1.0 / LN2)
    return value, grad


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    values: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    best_restart: int = 0


def _one_restart(fun: Objective, shape, start: np.ndarray, max_iters: int, step_tol: float,
                 keep_start: bool):
    theta0 = np.log(np.maximum(start, 1e-12)).ravel()

    def negf(theta):
        K = softmax(theta.reshape(shape))
        v, g = fun(K)
        # chain rule through the softmax along the last axis
        dtheta = K * (g - (K * g).sum(axis=-1, keepdims=True))
        return -v, -dtheta.ravel()

    res = minimize(negf, theta0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iters, "ftol": step_tol, "gtol": 1e-10})
    K = softmax(res.x.reshape(shape))
    best_K, best_v = K, fun(K)[0]

    vertex = np.zeros_like(K)
    np.put_along_axis(vertex, K.argmax(axis=-1)[..., None], 1.0, axis=-1)
    v = fun(vertex)[0]
    if v >= best_v:
        best_K, best_v = vertex, v
    if keep_start:
        v = fun(start)[0]
        if v > best_v:
            best_K, best_v = start, v
    return best_K, float(best_v), bool(res.success), int(res.nit)


def maximize_on_simplices(fun: Objective, shape: tuple, *, restarts: int = 32, max_iters: int = 500,
                          step_tol: float = 1e-12, seed: int = 0, init: Sequence[np.ndarray] = (),
                          workers: int = 1) -> AscentResult:
    """Maximize ``fun`` over arrays of ``shape`` whose last axis is a simplex.

    Restart ``i`` starts from ``init[i]`` when given, restart ``len(init)`` from
    the uniform point, and the rest from Dirichlet(1) draws seeded by
    ``(seed, i)``.  Ties go to the lowest restart index, so the result does not
    depend on ``workers``.
    """
    shape = tuple(shape)
    init = [np.asarray(k, dtype=float).reshape(shape) for k in init]
    n = max(restarts, len(init) + 1)

    def start(i):
        if i < len(init):
            return init[i], True
        if i == len(init):
            return np.full(shape, 1.0 / shape[-1]), False
        return restart_rng(seed, i).dirichlet(np.ones(shape[-1]), size=shape[:-1]), False

    def run(i):
        s, keep = start(i)
        return _one_restart(fun, shape, s, max_iters, step_tol, keep)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            outs = list(ex.map(run, range(n)))
    else:
        outs = [run(i) for i in range(n)]

    values = [o[1] for o in outs]
    best = int(np.argmax(values))  # first maximal index
    return AscentResult(outs[best][0], values[best], values, [o[2] for o in outs],
                        [o[3] for o in outs], best)


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All points of the (k-1)-simplex with coordinates in multiples of
    1/resolution, as rows."""
    pts = [c for c in product(range(resolution + 1), repeat=k - 1) if sum(c) <= resolution]
    pts = np.array(pts, dtype=float).reshape(-1, k - 1)
    last = resolution - pts.sum(axis=1, keepdims=True)
    return np.hstack([pts, last]) / resolution
