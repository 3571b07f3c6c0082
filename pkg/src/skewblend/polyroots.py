"""Simultaneous root iteration for polynomials given by an evaluator.

The evaluator returns (p(x), p'(x)) for an array of points. That lets us treat
polynomials defined by composition (iterates, critical-orbit relations)
without ever expanding their coefficients, which overflow or lose all
relative precision for degrees in the hundreds.
"""
from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

from .errors import RootSolverError

Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def circle_start(degree: int, radius: float, center: complex = 0.0, phase: float = 0.4) -> np.ndarray:
    k = np.arange(degree)
    return center + radius * np.exp(2j * np.pi * (k + phase) / degree)


def aberth(evaluate: Evaluator, x0: np.ndarray, tol: float = 1e-14, maxiter: int = 500,
           strict: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """Aberth-Ehrlich iteration from starting points x0.

    Returns (roots, last step sizes). Converged roots are frozen. With
    ``strict`` a RootSolverError is raised if any step stays above tol.
    """
    x = np.array(x0, dtype=complex)
    n = x.size
    step = np.full(n, np.inf)
    active = np.ones(n, bool)
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        f, df = evaluate(x[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = f / df
            diff = x[idx, None] - x[None, :]
            diff[np.arange(idx.size), idx] = np.inf
            s = (1.0 / diff).sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        bad = ~np.isfinite(ratio)
        if bad.any():
            # landed on a point with vanishing derivative; nudge
            w[bad] = 1e-8 * (1 + abs(x[idx][bad]))
        x[idx] -= w
        step[idx] = np.abs(w)
        scale = 1.0 + np.abs(x[idx])
        active[idx] = step[idx] > tol * scale
    if strict and active.any():
        raise RootSolverError(f"{int(active.sum())} of {n} roots did not converge")
    return x, step


def newton_polish(evaluate: Evaluator, x: np.ndarray, steps: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """A few Newton steps; returns the polished points and the final step size."""
    x = np.array(x, dtype=complex)
    dx = np.zeros(x.shape)
    for _ in range(steps):
        f, df = evaluate(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = f / df
        d = np.where(np.isfinite(d), d, 0.0)
        x = x - d
        dx = np.abs(d)
    return x, dx
