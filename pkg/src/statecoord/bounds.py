"""Upper and lower bounds for the correlated binary source sent over the
ternary state-dependent channel, and grid sweeps producing figure data.

    upper(eps)        = max_p  I(X;Y|S) - H(U)
    lower(alpha, eps) = max_p  I(X;Y|U) - I(X;S|U) - H(U|Y)

Both fix Q(x|s=0) to the uniform input and search Q(x|s=1) = (p3, p4, p5).
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .models import ModelError, make_fig3_channel, make_fig4_source
from .simplex import entropy_terms, maximize_on_simplices, simplex_grid

UNIFORM3 = np.full(3, 1.0 / 3)
CSV_COLUMNS = ["alpha", "eps", "upper18_bits", "lower19_bits",
               "p3_u", "p4_u", "p5_u", "p3_l", "p4_l", "p5_l"]

# I(X;Y|S) - H(U)
UPPER_TERMS = [(1.0, "XS"), (1.0, "YS"), (-1.0, "XYS"), (-1.0, "S"), (-1.0, "U")]
# I(X;Y|U) - I(X;S|U) - H(U|Y)
LOWER_TERMS = ([(1.0, "XU"), (1.0, "YU"), (-1.0, "XYU"), (-1.0, "U")]
               + [(-1.0, "XU"), (-1.0, "SU"), (1.0, "XSU"), (1.0, "U")]
               + [(-1.0, "UY"), (1.0, "Y")])


@dataclass(frozen=True)
class BoundSearch:
    restarts: int = 16
    grid_resolution: int = 19  # 210 grid points on the 2-simplex
    max_iters: int = 300
    seed: int = 0


@dataclass(frozen=True)
class SweepSpec:
    alpha_grid: tuple
    eps_grid: tuple
    search: BoundSearch = BoundSearch()

    def __post_init__(self):
        if not self.alpha_grid or not self.eps_grid:
            raise ValueError("grids must be nonempty")
        if any(not 0 <= a <= 1 for a in self.alpha_grid):
            raise ModelError("alpha grid must lie in [0, 1]")
        if any(not 0 <= e <= 0.5 for e in self.eps_grid):
            raise ModelError("eps grid must lie in [0, 0.5]")


@dataclass(frozen=True)
class BoundPoint:
    alpha: float
    eps: float
    upper18: float
    lower19: float
    argmax_p_upper: tuple
    argmax_p_lower: tuple

    def row(self) -> list:
        return [self.alpha, self.eps, self.upper18, self.lower19,
                *self.argmax_p_upper, *self.argmax_p_lower]


class _BoundObjective:
    """Value and gradient in (p3, p4, p5) for one of the bound expressions."""

    def __init__(self, alpha: float, eps: float, terms):
        self.P = np.asarray(make_fig4_source(alpha).P_us.table)
        self.T = np.asarray(make_fig3_channel(eps).T.table)  # [x][s][y]
        self.terms = terms

    def joint(self, p: np.ndarray) -> np.ndarray:
        Q = np.stack([UNIFORM3, p])  # [s][x]
        return np.einsum("us,sx,xsy->usxy", self.P, Q, self.T)

    def __call__(self, p: np.ndarray):
        value, dJ = entropy_terms(self.joint(p), "USXY", self.terms)
        grad = np.einsum("u,xy,uxy->x", self.P[:, 1], self.T[:, 1, :], dJ[:, 1])
        return value, grad


def _maximize(obj: _BoundObjective, search: BoundSearch):
    res = maximize_on_simplices(obj, (3,), restarts=search.restarts, max_iters=search.max_iters,
                                seed=search.seed)
    best_p, best_v = res.x, res.value
    for p in simplex_grid(3, search.grid_resolution):
        v = obj(p)[0]
        if v > best_v:
            best_p, best_v = p, v
    return float(best_v), tuple(float(x) for x in best_p)


def _check_eps(eps):
    if not 0 <= eps <= 0.5:
        raise ModelError(f"eps must lie in [0, 0.5], got {eps}")


@lru_cache(maxsize=4096)
def _upper_cached(eps: float, search: BoundSearch):
    # I(X;Y|S) and H(U) do not involve the U-S coupling; alpha = 0 is used
    return _maximize(_BoundObjective(0.0, eps, UPPER_TERMS), search)


def upper_bound_18(eps: float, search: BoundSearch = BoundSearch()):
    """(value, (p3, p4, p5)) of the upper bound that ignores the U-S correlation."""
    _check_eps(eps)
    return _upper_cached(float(eps), search)


def lower_bound_19(alpha: float, eps: float, search: BoundSearch = BoundSearch()):
    """(value, (p3, p4, p5)) of the lower bound that exploits the correlation."""
    _check_eps(eps)
    if not 0 <= alpha <= 1:
        raise ModelError(f"alpha must lie in [0, 1], got {alpha}")
    return _maximize(_BoundObjective(alpha, eps, LOWER_TERMS), search)


def bound_point(alpha: float, eps: float, search: BoundSearch = BoundSearch()) -> BoundPoint:
    up, pu = upper_bound_18(eps, search)
    lo, pl = lower_bound_19(alpha, eps, search)
    return BoundPoint(float(alpha), float(eps), up, lo, pu, pl)


def run_sweep(sweep: SweepSpec, mode: str = "fix-alpha", workers: int = 1) -> list:
    """Evaluate both bounds on the grid.

    ``fix-alpha`` iterates eps inside each alpha, ``fix-eps`` iterates alpha
    inside each eps.  Output order follows the grids whatever ``workers`` is.
    """
    if mode == "fix-alpha":
        pairs = [(a, e) for a in sweep.alpha_grid for e in sweep.eps_grid]
    elif mode == "fix-eps":
        pairs = [(a, e) for e in sweep.eps_grid for a in sweep.alpha_grid]
    else:
        raise ValueError(f"unknown sweep mode {mode!r}")

    def run(pair):
        return bound_point(pair[0], pair[1], sweep.search)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(run, pairs))
    return [run(p) for p in pairs]


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_csv(points: Iterable[BoundPoint], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for pt in points:
        w.writerow([_fmt(v) for v in pt.row()])


def to_csv(points: Iterable[BoundPoint]) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()


def sign_changes(xs: Sequence[float], ys: Sequence[float]) -> list:
    """Linear-interpolated abscissae where ``ys`` changes sign."""
    out = []
    for (x0, y0), (x1, y1) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        if y0 == 0:
            out.append(x0)
        elif y0 * y1 < 0:
            out.append(x0 + (x1 - x0) * y0 / (y0 - y1))
    if ys and ys[-1] == 0:
        out.append(xs[-1])
    return out


def parse_grid(text: str) -> tuple:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        start, step, stop = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    return tuple(float(t) for t in text.split(",") if t.strip())
