"""Derivative-free downhill simplex minimizer.

A plain Nelder-Mead descent with the classic coefficient set (reflection 1,
expansion 2, contraction 0.5, shrink 0.5) and relative size/value stopping
rules, so a fit is reproducible from its starting point alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

_REFLECT = 1.0
_EXPAND = 2.0
_CONTRACT = 0.5
_SHRINK = 0.5


@dataclass(frozen=True)
class MinimizeOptions:
    xtol_rel: float = 1e-8
    ftol_rel: float = 1e-8
    max_iter: int = 2000
    initial_step_rel: float = 0.05
    initial_step_abs: float = 0.00025


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    nfev: int
    converged: bool


def minimize(objective: Callable, x0,
             options: Optional[MinimizeOptions] = None) -> MinimizeResult:
    """Minimize a scalar function of a vector by simplex descent.

    The initial simplex perturbs each coordinate of x0 by a relative step
    (absolute for zero coordinates).  Iteration stops when both the simplex
    extent and the spread of function values are below their relative
    tolerances, or at the iteration cap, in which case the best point so
    far is returned with converged=False.
    """
    opts = options or MinimizeOptions()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise ValueError("objective must be finite at the starting point")

    sim = np.empty((n + 1, n))
    fvals = np.empty(n + 1)
    sim[0], fvals[0] = x0, f0
    nfev = 1
    for i in range(n):
        x = x0.copy()
        if x[i] != 0.0:
            x[i] *= 1.0 + opts.initial_step_rel
        else:
            x[i] = opts.initial_step_abs
        sim[i + 1] = x
        fvals[i + 1] = objective(x)
        nfev += 1

    iterations = 0
    while iterations < opts.max_iter:
        order = np.argsort(fvals, kind="stable")
        sim, fvals = sim[order], fvals[order]

        xscale = max(1.0, float(np.max(np.abs(sim[0]))))
        size = float(np.max(np.abs(sim[1:] - sim[0]))) / xscale
        fscale = max(1.0, abs(fvals[0]))
        spread = float(fvals[-1] - fvals[0]) / fscale
        if size <= opts.xtol_rel and spread <= opts.ftol_rel:
            return MinimizeResult(x=sim[0].copy(), fun=float(fvals[0]),
                                  iterations=iterations, nfev=nfev,
                                  converged=True)
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        xr = centroid + _REFLECT * (centroid - sim[-1])
        fr = float(objective(xr))
        nfev += 1
        if fr < fvals[0]:
            xe = centroid + _EXPAND * (centroid - sim[-1])
            fe = float(objective(xe))
            nfev += 1
            if fe < fr:
                sim[-1], fvals[-1] = xe, fe
            else:
                sim[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            sim[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + _CONTRACT * (xr - centroid)
            else:
                xc = centroid - _CONTRACT * (centroid - sim[-1])
            fc = float(objective(xc))
            nfev += 1
            if fc < min(fr, fvals[-1]):
                sim[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    sim[i] = sim[0] + _SHRINK * (sim[i] - sim[0])
                    fvals[i] = objective(sim[i])
                    nfev += 1

    order = np.argsort(fvals, kind="stable")
    return MinimizeResult(x=sim[order[0]].copy(), fun=float(fvals[order[0]]),
                          iterations=iterations, nfev=nfev, converged=False)
