"""Tauberian estimators: log-log slopes, (d, gamma_d), encoding exponent k, remainders."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counting import CountingCurve, MollifierSpec, smoothed_curve
from .encoding import Perturbed, encode, rule_to_dict, theoretical_envelope
from .errors import DegenerateResidual, IllConditioned, ValidationError
from .spectra import SpectralMeasure

Window = tuple[float, float]


@dataclass
class SlopeEstimate:
    alpha_hat: float
    intercept: float
    window: Window
    r_squared: float
    n_points: int


@dataclass
class WeylEstimate:
    d_hat: float
    gamma_hat: float
    slope: SlopeEstimate
    epsilon: float

    @property
    def d_nearest(self) -> int:
        return int(round(self.d_hat))

    @property
    def d_deviation(self) -> float:
        return abs(self.d_hat - self.d_nearest)

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.slope.alpha_hat,
            "d_hat": self.d_hat,
            "d_nearest": self.d_nearest,
            "d_deviation": self.d_deviation,
            "gamma_hat": self.gamma_hat,
            "window": list(self.slope.window),
            "r_squared": self.slope.r_squared,
            "n_points": self.slope.n_points,
            "epsilon": self.epsilon,
        }


def _in_window(y: np.ndarray, window: Window) -> np.ndarray:
    lo, hi = window
    if not 0 < lo < hi:
        raise ValidationError(f"window must satisfy 0 < lo < hi, got {window}")
    return (y >= lo) & (y <= hi)


def _samples(samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, CountingCurve):
        return samples.y, samples.N
    y, n = samples
    return np.asarray(y, dtype=float), np.asarray(n, dtype=float)


def default_window(y_max: float) -> Window:
    """Top decade of the available edge variable."""
    return (y_max / 10.0, y_max)


def loglog_slope(samples, window: Window) -> SlopeEstimate:
    """OLS of log N against log y over the window. ``samples`` is (y, N) or a CountingCurve."""
    y, n = _samples(samples)
    mask = _in_window(y, window)
    if mask.sum() < 3:
        raise ValidationError(f"need >= 3 samples inside window {window}, got {int(mask.sum())}")
    if np.any(n[mask] <= 0):
        raise ValidationError("nonpositive counting values inside the fit window")
    lx, ly = np.log(y[mask]), np.log(n[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return SlopeEstimate(float(slope), float(intercept), (float(window[0]), float(window[1])),
                         r2, int(mask.sum()))


def estimate_weyl(curve, epsilon: float, window: Window) -> WeylEstimate:
    """d_hat = 2 alpha; gamma_hat = eps^(d/2) * geometric mean of N / y^(d/2)."""
    slope = loglog_slope(curve, window)
    d_hat = 2.0 * slope.alpha_hat
    y, n = _samples(curve)
    mask = _in_window(y, window)
    log_a = np.mean(np.log(n[mask]) - (d_hat / 2) * np.log(y[mask]))
    gamma_hat = math.exp((d_hat / 2) * math.log(epsilon) + log_a)
    return WeylEstimate(d_hat, gamma_hat, slope, float(epsilon))


def estimate_k(curve, d: int, window: Window) -> float:
    """k_hat = d / (2 alpha) from counting data in the bulk variable x = a - C."""
    return d / (2.0 * loglog_slope(curve, window).alpha_hat)


def density_exponent(curve: CountingCurve, window: Window) -> SlopeEstimate:
    """Log-log slope of the mollified density rho."""
    return loglog_slope((curve.y, curve.rho), window)


def remainder_probe(curve, d: int, gamma: float, epsilon: float, window: Window) -> SlopeEstimate:
    """Log-log slope of |N - gamma eps^(-d/2) y^(d/2)| over the window."""
    y, n = _samples(curve)
    resid = np.abs(n - gamma * epsilon ** (-d / 2) * y ** (d / 2))
    mask = _in_window(y, window)
    scale = np.maximum(1.0, np.abs(n))
    keep = mask & (resid > 1e-12 * scale)
    if keep.sum() < 3:
        raise DegenerateResidual("remainder vanishes inside the window")
    return loglog_slope((y[keep], resid[keep]), window)


@dataclass
class TwoTermFit:
    A: float
    B: float
    r_squared: float
    window: Window
    n_points: int

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "r_squared": self.r_squared,
                "window": list(self.window), "n_points": self.n_points}


def two_term_fit(curve, window: Window, d: int = 3) -> TwoTermFit:
    """Least squares of N against {y^(d/2), y^((d-1)/2)}."""
    y, n = _samples(curve)
    mask = _in_window(y, window)
    if mask.sum() < 10:
        raise ValidationError(f"two-term fit needs >= 10 samples, got {int(mask.sum())}")
    ym, nm = y[mask], n[mask]
    basis = np.column_stack([ym ** (d / 2), ym ** ((d - 1) / 2)])
    col = np.linalg.norm(basis, axis=0)
    scaled = basis / col
    if np.linalg.cond(scaled) > 1e8:
        raise IllConditioned(f"two-term basis ill-conditioned on window {window}")
    coef, *_ = np.linalg.lstsq(scaled, nm, rcond=None)
    coef = coef / col
    resid = nm - basis @ coef
    ss_tot = float(np.sum((nm - nm.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot else 1.0
    return TwoTermFit(float(coef[0]), float(coef[1]), r2, (float(window[0]), float(window[1])),
                      int(mask.sum()))


@dataclass
class StabilityReport:
    d_hat: float
    envelope_K: float
    estimate: WeylEstimate
    rule: dict

    def to_dict(self) -> dict:
        return {**self.estimate.to_dict(), "envelope_K": self.envelope_K, "rule": self.rule}


def log_grid(window: Window, n_points: int = 200) -> np.ndarray:
    return np.geomspace(window[0], window[1], n_points)


def stability_report(sm: SpectralMeasure, rule: Perturbed, window: Window,
                     n_points: int = 200, moll: MollifierSpec | None = None) -> StabilityReport:
    """Exponent recovery and the fitted envelope constant K for a perturbed encoding.

    K = max over the window of |N / (gamma eps^(-d/2) y^(d/2)) - 1| / envelope(y),
    with N the raw counting function.
    """
    if not isinstance(rule, Perturbed):
        raise ValidationError("stability_report needs a perturbed rule")
    if sm.gamma_expected is None or sm.dimension is None:
        raise ValidationError("stability_report needs dimension and gamma_expected metadata")
    em = encode(sm, rule)
    curve = smoothed_curve(em, log_grid(window, n_points), moll)
    est = estimate_weyl(curve, rule.epsilon, window)
    d = sm.dimension
    lead = sm.gamma_expected * rule.epsilon ** (-d / 2) * curve.y ** (d / 2)
    rel = np.abs(curve.N / lead - 1.0)
    K = float(np.max(rel / theoretical_envelope(rule, curve.y)))
    return StabilityReport(est.d_hat, K, est, rule_to_dict(rule))
