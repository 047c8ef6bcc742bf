"""Heat traces, spectral zeta functions, their edge-side transfers, and a_0/a_2 fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc
from scipy.special import gamma as gamma_fn

from .encoding import Affine, EncodedMeasure
from .errors import DomainError, IllConditioned, UncontrolledTail, ValidationError
from .spectra import SpectralMeasure

USABLE_RTOL = 1e-6
TAIL_SAFETY = 2.0


@dataclass
class HeatSample:
    t: float
    theta: float
    truncation_bound: float
    tail_known: bool = True

    @property
    def usable(self) -> bool:
        return self.tail_known and self.truncation_bound <= USABLE_RTOL * self.theta


def heat_tail_bound(gamma_d: float, d: int, t: float, lambda_max: float) -> float:
    """Bound on sum_{lambda > lambda_max} m e^{-t lambda} under N(L) <= 2 gamma L^(d/2).

    Integration by parts gives t * int_{lambda_max}^inf N(L) e^{-tL} dL
    <= 2 gamma t^(-d/2) Gamma(d/2 + 1, t lambda_max).
    """
    s = d / 2 + 1
    return TAIL_SAFETY * gamma_d * t ** (-d / 2) * gamma_fn(s) * gammaincc(s, t * lambda_max)


def heat_trace(sm: SpectralMeasure, t: float) -> HeatSample:
    if not t > 0:
        raise DomainError("heat trace needs t > 0")
    theta = float(np.dot(sm.weights, np.exp(-t * sm.lambdas)))
    if sm.gamma_expected is None or sm.dimension is None:
        return HeatSample(float(t), theta, math.inf, tail_known=False)
    bound = heat_tail_bound(sm.gamma_expected, sm.dimension, t, sm.lambda_max)
    return HeatSample(float(t), theta, float(bound))


def _require_affine(em: EncodedMeasure, what: str) -> bool:
    if isinstance(em.rule, Affine):
        return True
    warnings.warn(f"{what}: transfer identity only holds for affine encodings; check skipped",
                  stacklevel=3)
    return False


def edge_heat(em: EncodedMeasure, s: float) -> HeatSample:
    """H_edge(s) = sum m e^{-s (edge - C_n)}; equals Theta(eps s) for affine rules."""
    if not s > 0:
        raise DomainError("edge heat trace needs s > 0")
    val = float(np.dot(em.weights, np.exp(-s * (em.edge - em.C))))
    sm = em.source
    if isinstance(em.rule, Affine) and sm.gamma_expected is not None and sm.dimension is not None:
        bound = heat_tail_bound(sm.gamma_expected, sm.dimension, em.rule.epsilon * s, sm.lambda_max)
        return HeatSample(float(s), val, float(bound))
    return HeatSample(float(s), val, math.inf, tail_known=False)


def heat_transfer_residual(em: EncodedMeasure, s_grid) -> float:
    """max relative |H_edge(s) - Theta(eps s)| over the grid."""
    if not _require_affine(em, "edge_heat"):
        return math.nan
    eps = em.rule.epsilon
    worst = 0.0
    for s in np.asarray(s_grid, dtype=float):
        h = edge_heat(em, s).theta
        th = heat_trace(em.source, eps * s).theta
        worst = max(worst, abs(h - th) / abs(th))
    return worst


@dataclass
class ZetaValue:
    u: float
    value: float
    tail_bound: float
    zero_modes_excluded: float = 0.0


def _zeta_dimension(sm: SpectralMeasure, u: float) -> int:
    if sm.dimension is None:
        raise ValidationError("zeta needs the spectral dimension")
    d = sm.dimension
    if not u > d / 2:
        raise DomainError(f"zeta sum diverges for u={u} <= d/2={d / 2}")
    return d


def zeta_tail_bound(gamma_d: float, d: int, u: float, lambda_max: float) -> float:
    """sum_{lambda > L} m lambda^(-u) <= 2 gamma u/(u - d/2) L^(d/2 - u)."""
    return TAIL_SAFETY * gamma_d * u / (u - d / 2) * lambda_max ** (d / 2 - u)


def zeta(sm: SpectralMeasure, u: float, tail_gamma: float | None = None) -> ZetaValue:
    """Truncated spectral zeta sum over the nonzero eigenvalues, with a certified tail bound."""
    d = _zeta_dimension(sm, u)
    pos = sm.lambdas > 0
    value = float(np.dot(sm.weights[pos], sm.lambdas[pos] ** (-u)))
    g = tail_gamma if tail_gamma is not None else sm.gamma_expected
    tail = math.inf if g is None else zeta_tail_bound(g, d, u, sm.lambda_max)
    return ZetaValue(float(u), value, tail, float(sm.weights[~pos].sum()))


def edge_zeta(em: EncodedMeasure, u: float) -> float:
    """sum m (edge - C_n)^(-u) over atoms strictly below the edge."""
    _zeta_dimension(em.source, u)
    if not isinstance(em.rule, Affine):
        raise ValidationError("edge zeta transfer is defined for affine encodings")
    y = em.edge - em.C
    pos = y > 0
    return float(np.dot(em.weights[pos], y[pos] ** (-u)))


def zeta_transfer_residual(em: EncodedMeasure, u_grid) -> float:
    """max relative |zeta_edge(u) - eps^(-u) zeta(u)| over the grid."""
    eps = em.rule.epsilon
    worst = 0.0
    for u in np.asarray(u_grid, dtype=float):
        z = zeta(em.source, u).value
        worst = max(worst, abs(edge_zeta(em, u) - eps ** (-u) * z) / abs(z))
    return worst


@dataclass
class SeeleyFit:
    a0_hat: float
    a2_hat: float
    fit_window: tuple[float, float]
    residual_norm: float

    def to_dict(self) -> dict:
        return {"a0_hat": self.a0_hat, "a2_hat": self.a2_hat,
                "window": list(self.fit_window), "residual_norm": self.residual_norm}


def _fit_a0_a2(samples: list[HeatSample], d: int) -> SeeleyFit:
    bad = [s.t for s in samples if not s.usable]
    if bad:
        raise UncontrolledTail(f"heat-trace tail not controlled at t={bad[0]:.3g}")
    t = np.array([s.t for s in samples])
    rhs = (4 * math.pi * t) ** (d / 2) * np.array([s.theta for s in samples])
    basis = np.column_stack([np.ones_like(t), t])
    col = np.linalg.norm(basis, axis=0)
    if len(t) < 3 or np.linalg.cond(basis / col) > 1e8:
        raise IllConditioned("a0/a2 fit ill-conditioned; widen or densify the t grid")
    coef, *_ = np.linalg.lstsq(basis / col, rhs, rcond=None)
    coef = coef / col
    res = float(np.linalg.norm(rhs - basis @ coef) / np.linalg.norm(rhs))
    return SeeleyFit(float(coef[0]), float(coef[1]), (float(t.min()), float(t.max())), res)


def seeley_fit(sm: SpectralMeasure, t_grid, d: int | None = None) -> SeeleyFit:
    """Fit (4 pi t)^(d/2) Theta(t) ~ a0 + a2 t on the grid."""
    d = d or sm.dimension
    if d is None:
        raise ValidationError("seeley_fit needs a dimension")
    return _fit_a0_a2([heat_trace(sm, t) for t in np.asarray(t_grid, dtype=float)], d)


def seeley_fit_edge(em: EncodedMeasure, s_grid, d: int | None = None) -> SeeleyFit:
    """Same fit on the edge-side heat trace H_edge(s)."""
    d = d or em.source.dimension
    if d is None:
        raise ValidationError("seeley_fit needs a dimension")
    return _fit_a0_a2([edge_heat(em, s) for s in np.asarray(s_grid, dtype=float)], d)
