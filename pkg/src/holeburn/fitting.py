"""Least-squares estimators built on the simplex minimizer.

All nonlinear fits run through `minimize` on internally normalized
parameters (frequencies in units of the scan span, signals in units of
their spread), which keeps the stopping rule meaningful when parameter
magnitudes differ by many orders.  Reported values are always mapped back
to physical units.  Parameter uncertainties come from the usual
linearization at the optimum: cov = s^2 (J^T J)^-1 with a finite-difference
Jacobian and s^2 the residual variance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .integrator import IntegrationDomain, TrapDecayModel
from .model import BeamGeometry, MaterialParams
from .simplex import MinimizeOptions, MinimizeResult, minimize


class FitError(RuntimeError):
    """A fit could not produce a usable parameter estimate."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def lorentzian_hole(freq, baseline, depth, center, fwhm):
    """Constant-minus-Lorentzian hole profile."""
    half = fwhm / 2.0
    f = np.asarray(freq, dtype=float)
    return baseline - depth * half**2 / ((f - center) ** 2 + half**2)


def exp_decay(t, amplitude, tau, offset=0.0):
    """Exponential decay amplitude * exp(-t/tau) + offset."""
    return amplitude * np.exp(-np.asarray(t, dtype=float) / tau) + offset


def _fd_jacobian(model_fn, params, rel_step=1e-6):
    """Central-difference Jacobian of model_fn w.r.t. its parameter vector."""
    params = np.asarray(params, dtype=float)
    cols = []
    for i in range(params.size):
        h = rel_step * max(abs(params[i]), 1e-30)
        hi, lo = params.copy(), params.copy()
        hi[i] += h
        lo[i] -= h
        cols.append((model_fn(hi) - model_fn(lo)) / (2 * h))
    return np.column_stack(cols)


def _param_errors(model_fn, params, residuals, weights=None):
    """One-sigma parameter uncertainties from the linearized fit.

    The normal matrix is built on per-parameter-scaled columns so that
    wildly different magnitudes (baselines near 1 next to frequencies
    near 1e8) do not get truncated as numerically rank deficient.
    """
    n, p = residuals.size, len(params)
    if n <= p:
        return np.full(p, np.nan)
    jac = _fd_jacobian(model_fn, params)
    if weights is not None:
        residuals = residuals * weights
        jac = jac * weights[:, None]
    sse = float(np.dot(residuals, residuals))
    scale = np.maximum(np.abs(np.asarray(params, dtype=float)), 1e-30)
    jac_s = jac * scale[None, :]
    cov_s = np.linalg.pinv(jac_s.T @ jac_s) * (sse / (n - p))
    var = np.diag(cov_s) * scale**2
    return np.sqrt(np.clip(var, 0.0, None))


@dataclass
class LorentzianHoleFit:
    """Result of a constant-minus-Lorentzian spectral-hole fit."""

    baseline: float
    depth: float
    center: float
    fwhm: float
    baseline_err: float
    depth_err: float
    center_err: float
    fwhm_err: float
    residual: float
    converged: bool
    hole_detected: bool
    iterations: int

    def to_dict(self):
        return {
            "baseline": self.baseline, "depth": self.depth,
            "center_hz": self.center, "fwhm_hz": self.fwhm,
            "baseline_err": self.baseline_err, "depth_err": self.depth_err,
            "center_err_hz": self.center_err, "fwhm_err_hz": self.fwhm_err,
            "residual_sse": self.residual, "converged": self.converged,
            "hole_detected": self.hole_detected,
            "iterations": self.iterations,
        }


@dataclass
class ExpDecayFit:
    """Result of an exponential decay fit a exp(-t/tau) (+ offset)."""

    amplitude: float
    tau: float
    offset: Optional[float]
    amplitude_err: float
    tau_err: float
    offset_err: Optional[float]
    residual: float
    converged: bool
    iterations: int

    def to_dict(self):
        return {
            "amplitude": self.amplitude, "tau_s": self.tau,
            "offset": self.offset, "amplitude_err": self.amplitude_err,
            "tau_err_s": self.tau_err, "offset_err": self.offset_err,
            "residual_sse": self.residual, "converged": self.converged,
            "iterations": self.iterations,
        }


@dataclass
class LinearFit:
    """Ordinary least squares line with a t-distribution slope interval."""

    slope: float
    intercept: float
    confidence: float
    slope_ci: float
    slope_err: float
    intercept_err: float
    residual: float

    def to_dict(self):
        return {
            "slope": self.slope, "intercept": self.intercept,
            "confidence": self.confidence, "slope_ci": self.slope_ci,
            "slope_err": self.slope_err, "intercept_err": self.intercept_err,
            "residual_sse": self.residual,
        }

    def covers(self, true_slope) -> bool:
        return abs(true_slope - self.slope) <= self.slope_ci


@dataclass
class TrapFitResult:
    """Multi-curve trap-model fit: shared gamma_trap and background, A per curve."""

    gamma_trap: float
    background_b: float
    scale_a: list
    residual: float
    converged: bool
    iterations: int

    def to_dict(self):
        return {
            "gamma_trap_per_s": self.gamma_trap,
            "background_b_counts_per_w": self.background_b,
            "scale_a": list(self.scale_a),
            "residual_sse": self.residual,
            "converged": self.converged,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class TrapFitOptions:
    gamma_trap_seed: float = 1e5
    n_bins: int = 1024
    max_iter: int = 8000
    xtol_rel: float = 1e-9
    ftol_rel: float = 1e-9


def fit_hole_lorentzian(freq, signal, sigma_point=None,
                        options: Optional[MinimizeOptions] = None
                        ) -> LorentzianHoleFit:
    """Fit a constant minus a Lorentzian to an (unsmoothed) hole scan.

    Parameters
    ----------
    freq, signal : array_like
        Scan axis [Hz] and power-normalized signal, at least 8 points.
    sigma_point : float or array_like, optional
        Per-point noise level used to weight residuals; unweighted when
        omitted.
    """
    f = np.asarray(freq, dtype=float)
    y = np.asarray(signal, dtype=float)
    if f.shape != y.shape or f.ndim != 1:
        raise ValueError("freq and signal must be 1-D arrays of equal length")
    if f.size < 8:
        raise ValueError("need at least 8 points spanning the hole")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(y))):
        raise ValueError("freq and signal must be finite (drop excluded "
                         "points first)")
    span = float(np.ptp(f))
    if span <= 0:
        raise ValueError("freq values must not all coincide")

    f_mid = 0.5 * (np.min(f) + np.max(f))
    x = (f - f_mid) / span
    y_off = float(np.median(y))
    y_scale = float(np.ptp(y)) or 1.0
    yn = (y - y_off) / y_scale
    weights = None
    if sigma_point is not None:
        sigma = np.broadcast_to(np.asarray(sigma_point, dtype=float), y.shape)
        if np.any(sigma <= 0):
            raise ValueError("sigma_point must be positive")
        weights = y_scale / sigma  # 1/sigma on the normalized signal

    # Seeds: center at the minimum, width at 10% of the span, baseline at
    # the upper-quartile level.
    c0 = float(np.percentile(yn, 75))
    d0 = max(c0 - float(np.min(yn)), 1e-3)
    x0 = float(x[np.argmin(yn)])
    w0 = 0.1

    # depth and width enter through their magnitudes, so the reported hole
    # is never "negative" (a bump simply fits as zero depth)
    def objective(p):
        r = lorentzian_hole(x, p[0], abs(p[1]), p[2], p[3]) - yn
        if weights is not None:
            r = r * weights
        return float(np.dot(r, r))

    opts = options or MinimizeOptions(xtol_rel=1e-10, ftol_rel=1e-10,
                                      max_iter=4000)
    res = minimize(objective, [c0, d0, x0, w0], opts)
    res2 = minimize(objective, res.x, opts)  # restart polish
    if res2.fun <= res.fun:
        res = MinimizeResult(res2.x, res2.fun, res.iterations + res2.iterations,
                             res.nfev + res2.nfev,
                             res.converged or res2.converged)

    cn, dn, xn0, wn = res.x
    dn = abs(dn)
    wn = abs(wn)
    baseline = cn * y_scale + y_off
    depth = dn * y_scale
    center = xn0 * span + f_mid
    fwhm = wn * span

    params = np.array([baseline, depth, center, fwhm])
    residuals = lorentzian_hole(f, *params) - y
    point_weights = None if sigma_point is None else weights / y_scale
    errs = _param_errors(lambda p: lorentzian_hole(f, *p), params, residuals,
                         point_weights)
    weighted = residuals if point_weights is None else residuals * point_weights
    sse = float(np.dot(weighted, weighted))

    if not res.converged or fwhm <= 0:
        raise FitError("Lorentzian hole fit failed",
                       diagnostics={"converged": res.converged,
                                    "fwhm_hz": fwhm, "residual_sse": sse,
                                    "iterations": res.iterations})

    # Holes shallower than 0.1% of the signal scale are indistinguishable
    # from fit leftovers on structureless data, so they are not reported
    # as detections even when the formal 3-sigma test would pass.
    scale_ref = max(abs(baseline), float(np.ptp(y)))
    detected = bool(depth > max(3 * errs[1], 1e-3 * scale_ref))
    return LorentzianHoleFit(
        baseline=baseline, depth=depth, center=center, fwhm=fwhm,
        baseline_err=float(errs[0]), depth_err=float(errs[1]),
        center_err=float(errs[2]), fwhm_err=float(errs[3]),
        residual=sse, converged=res.converged, hole_detected=detected,
        iterations=res.iterations)


def hom_linewidth_from_hole(fwhm):
    """Upper bound on the homogeneous linewidth: half the hole FWHM."""
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    return fwhm / 2.0


def fit_exponential(times, values, with_offset=True,
                    options: Optional[MinimizeOptions] = None) -> ExpDecayFit:
    """Fit a exp(-t/tau) plus an optional constant floor.

    The offset mode captures a persistent residual level that the decay
    relaxes onto instead of zero.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-D arrays of equal length")
    if t.size < 4:
        raise ValueError("need at least 4 points")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("times and values must be finite")
    tspan = float(t[-1] - t[0])
    if tspan <= 0:
        raise ValueError("times must increase")

    xt = (t - t[0]) / tspan
    y_scale = float(np.ptp(y)) or max(abs(float(np.max(y))), 1.0)
    yn = y / y_scale

    c0 = float(np.min(yn)) if with_offset else 0.0
    a0 = float(yn[0]) - c0
    below = np.nonzero(yn - c0 <= a0 / np.e)[0]
    tau0 = float(xt[below[0]]) if below.size and below[0] > 0 else 1.0 / 3.0

    if with_offset:
        def objective(p):
            r = exp_decay(xt, p[0], abs(p[1]) + 1e-12, p[2]) - yn
            return float(np.dot(r, r))
        x0 = [a0, tau0, c0]
    else:
        def objective(p):
            r = exp_decay(xt, p[0], abs(p[1]) + 1e-12, 0.0) - yn
            return float(np.dot(r, r))
        x0 = [a0, tau0]

    opts = options or MinimizeOptions(xtol_rel=1e-10, ftol_rel=1e-10,
                                      max_iter=4000)
    res = minimize(objective, x0, opts)
    res = minimize(objective, res.x, opts)

    tau_n = abs(res.x[1]) + 1e-12
    tau = tau_n * tspan
    # Amplitude refers to t = 0 of the model a exp(-t/tau); the internal
    # fit is anchored at t[0].
    amp = res.x[0] * y_scale * np.exp(t[0] / tau)
    offset = res.x[2] * y_scale if with_offset else None

    if with_offset:
        def model(p):
            return exp_decay(t, p[0], p[1], p[2])
        params = np.array([amp, tau, offset])
    else:
        def model(p):
            return exp_decay(t, p[0], p[1])
        params = np.array([amp, tau])
    residuals = model(params) - y
    errs = _param_errors(model, params, residuals)
    sse = float(np.dot(residuals, residuals))

    return ExpDecayFit(
        amplitude=float(amp), tau=float(tau),
        offset=None if offset is None else float(offset),
        amplitude_err=float(errs[0]), tau_err=float(errs[1]),
        offset_err=None if offset is None else float(errs[2]),
        residual=sse, converged=res.converged, iterations=res.iterations)


def fit_linear_ci(x, y, confidence=0.80) -> LinearFit:
    """Ordinary least squares with a t-distribution slope interval."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("x and y must be finite")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0:
        raise ValueError("x values must not all coincide")

    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (slope * x + intercept)
    sse = float(np.dot(residuals, residuals))
    dof = x.size - 2
    s2 = sse / dof
    slope_err = float(np.sqrt(s2 / sxx))
    intercept_err = float(np.sqrt(s2 * (1.0 / x.size + x.mean() ** 2 / sxx)))
    tq = float(stats.t.ppf(0.5 + confidence / 2.0, dof))
    return LinearFit(slope=slope, intercept=intercept, confidence=confidence,
                     slope_ci=tq * slope_err, slope_err=slope_err,
                     intercept_err=intercept_err, residual=sse)


def _curve_triples(curves):
    """Normalize fit input to (times, counts, power) triples."""
    out = []
    for item in curves:
        if isinstance(item, tuple) and len(item) == 3:
            t, y, p0 = item
        elif isinstance(item, tuple) and len(item) == 2:
            curve, p0 = item
            t, y = curve.time_s, curve.counts_per_s
        else:
            t, y, p0 = item.time_s, item.counts_per_s, item.power_w
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError("curve arrays must be 1-D and equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("curve arrays must be finite")
        if np.ptp(y) == 0:
            raise ValueError("degenerate curve: constant signal")
        if p0 is None or p0 <= 0:
            raise ValueError("each curve needs a positive excitation power")
        out.append((t, y, float(p0)))
    return out


def fit_trap_model(curves, material: MaterialParams, focus_fwhm=1e-6,
                   domain: Optional[IntegrationDomain] = None,
                   options: Optional[TrapFitOptions] = None) -> TrapFitResult:
    """Globally fit the trapping rate to one or more decay curves.

    gamma_trap and the background coefficient B are shared across curves;
    the scale factor A is individual, absorbing detection-efficiency drift
    between measurements.  Minimizes the summed squared difference between
    A_c * S_c(t; gamma_trap) + B * P_c and the measured count rates.

    Parameters
    ----------
    curves : sequence
        (DecayCurve, power) pairs, DecayCurve records carrying power_w, or
        (times, counts, power) triples.
    material : MaterialParams
    focus_fwhm : float
        Beam focus FWHM shared by all measurements [m].
    domain : IntegrationDomain, optional
    options : TrapFitOptions, optional
    """
    opts = options or TrapFitOptions()
    triples = _curve_triples(curves)
    if not triples:
        raise ValueError("need at least one curve")

    models = []
    for t, _, p0 in triples:
        geom = BeamGeometry.for_material(material, power=p0,
                                         focus_fwhm=focus_fwhm)
        models.append(TrapDecayModel(material, geom, domain)
                      .compressed(opts.n_bins))

    g_seed = opts.gamma_trap_seed
    a_seeds, b_terms = [], []
    shapes = [m.signal(t, g_seed) for m, (t, _, _) in zip(models, triples)]
    for (t, y, p0), s in zip(triples, shapes):
        denom = s[0] - s[-1]
        a0 = (y[0] - y[-1]) / denom if abs(denom) > 0 else y[0] / max(s[0], 1e-300)
        if not np.isfinite(a0) or a0 <= 0:
            a0 = y[0] / max(s[0], 1e-300)
        a_seeds.append(a0)
        b_terms.append((y[-1] - a0 * s[-1]) / p0)
    b_seed = max(float(np.median(b_terms)), 0.0)
    b_scale = max(b_seed, 0.01 * abs(float(np.median(
        [y[-1] / p0 for _, y, p0 in triples]))), 1e-30)

    scales = np.array([g_seed] + a_seeds + [b_scale])

    def objective(xn):
        p = xn * scales
        gamma, b = p[0], p[-1]
        sse = 0.0
        with np.errstate(over="ignore"):
            for (t, y, p0), m, a in zip(triples, models, p[1:-1]):
                r = a * m.signal(t, gamma) + b * p0 - y
                sse += float(np.dot(r, r))
        return sse if np.isfinite(sse) else 1e300

    x0 = np.concatenate([[1.0], np.ones(len(triples)), [b_seed / b_scale]])
    res = minimize(objective, x0,
                   MinimizeOptions(xtol_rel=opts.xtol_rel,
                                   ftol_rel=opts.ftol_rel,
                                   max_iter=opts.max_iter))

    p = res.x * scales
    if p[0] <= 0:
        raise FitError("trap fit produced a nonpositive trapping rate",
                       diagnostics={"gamma_trap_per_s": float(p[0]),
                                    "residual_sse": float(res.fun),
                                    "iterations": res.iterations})
    return TrapFitResult(gamma_trap=float(p[0]),
                         background_b=float(p[-1]),
                         scale_a=[float(a) for a in p[1:-1]],
                         residual=float(res.fun), converged=res.converged,
                         iterations=res.iterations)
