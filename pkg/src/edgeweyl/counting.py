"""Edge-variable counting, the exact composition identity, mollified density, clustering windows."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .encoding import Affine, EncodedMeasure, encode
from .errors import ConvergenceError, ValidationError
from .spectra import SpectralMeasure

_GL_ORDER = 96


def count_edge(em: EncodedMeasure, C):
    """N(C) = total weight of atoms with C_n >= C. Accepts scalars or arrays."""
    asc = em.C[::-1]
    cum = np.concatenate(([0.0], np.cumsum(em.weights)))
    # number of atoms with C_n >= C
    k = asc.size - np.searchsorted(asc, np.asarray(C, dtype=float), side="left")
    out = cum[k]
    return float(out) if np.ndim(out) == 0 else out


def count_lambda(sm: SpectralMeasure, Lambda):
    """N(Lambda) = total weight of atoms with lambda_n <= Lambda (right-continuous)."""
    cum = np.concatenate(([0.0], np.cumsum(sm.weights)))
    out = cum[np.searchsorted(sm.lambdas, np.asarray(Lambda, dtype=float), side="right")]
    return float(out) if np.ndim(out) == 0 else out


def count_y(em: EncodedMeasure, y):
    """Counting function in the edge variable y = edge - C."""
    return count_edge(em, em.edge - np.asarray(y, dtype=float))


@dataclass
class CompositionReport:
    max_discrepancy: float
    n_points: int
    offending: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_discrepancy == 0


def check_composition(sm: SpectralMeasure, em: EncodedMeasure, C_grid) -> CompositionReport:
    """Compare N_C(C) with N_Delta((a - C)/epsilon) on a grid; exact for affine rules."""
    if not isinstance(em.rule, Affine):
        raise ValidationError("the composition identity is only claimed for affine encodings")
    C = np.asarray(C_grid, dtype=float)
    lhs = count_edge(em, C)
    rhs = count_lambda(sm, (em.rule.a - C) / em.rule.epsilon)
    diff = np.abs(np.atleast_1d(lhs) - np.atleast_1d(rhs))
    bad = np.atleast_1d(C)[diff != 0]
    return CompositionReport(float(diff.max(initial=0.0)), int(diff.size), bad.tolist())


def epsilon_collapse_discrepancy(sm: SpectralMeasure, eps1: float, eps2: float, Lambda_grid) -> float:
    """max |N_{eps1}(C1) - N_{eps2}(C2)| over C_i = pi - eps_i * Lambda."""
    lam = np.asarray(Lambda_grid, dtype=float)
    e1, e2 = Affine(eps1), Affine(eps2)
    n1 = count_edge(encode(sm, e1), e1(lam))
    n2 = count_edge(encode(sm, e2), e2(lam))
    return float(np.max(np.abs(np.atleast_1d(n1) - np.atleast_1d(n2)), initial=0.0))


# -- mollifier ----------------------------------------------------------------------

def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def bump_normalization() -> float:
    val, err = quad(lambda t: math.exp(-1.0 / (1.0 - t * t)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    if err > 1e-12:
        raise ConvergenceError(f"bump normalization quadrature error {err:.3g}")
    return 1.0 / val


@lru_cache(maxsize=1)
def _gauss_legendre():
    return np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class MollifierSpec:
    """phi(t) = c exp(-1/(1-t^2)) on (-1, 1); width h(y) = h0 * y**theta."""

    h0: float = 1.0
    theta: float = 0.5

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValidationError("h0 must be positive")
        if not 0 < self.theta < 1:
            raise ValidationError("theta must lie in (0, 1)")

    @property
    def c(self) -> float:
        return bump_normalization()

    def width(self, y):
        return self.h0 * np.asarray(y, dtype=float) ** self.theta

    def phi(self, t):
        return self.c * _bump(t)

    def cdf(self, s):
        """int_{-1}^{s} phi, by Gauss-Legendre on [-1, s]."""
        s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
        x, w = _gauss_legendre()
        half = 0.5 * (s + 1.0)
        nodes = -1.0 + half[..., None] * (x + 1.0)
        return half * (self.phi(nodes) @ w)

    def mass(self) -> float:
        val, _ = quad(self.phi, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        return val


@dataclass
class CountingCurve:
    y: np.ndarray
    N: np.ndarray
    N_smoothed: np.ndarray
    rho: np.ndarray
    epsilon: float
    mollifier: MollifierSpec

    def __len__(self) -> int:
        return self.y.size

    def rows(self):
        return zip(self.y, self.N, self.N_smoothed, self.rho)


def rule_scale(em: EncodedMeasure) -> float:
    return getattr(em.rule, "epsilon", getattr(em.rule, "b", 1.0))


def smoothed_curve(em: EncodedMeasure, y_grid, moll: MollifierSpec | None = None) -> CountingCurve:
    """Sample N, the mollified N * phi_h and its derivative rho on an increasing y grid.

    Both smoothed quantities are exact finite sums over atoms within the kernel
    support: N_h(y) = sum_n w_n Phi((y - y_n)/h), rho(y) = sum_n w_n phi_h(y - y_n).
    """
    moll = moll or MollifierSpec()
    y = np.asarray(y_grid, dtype=float)
    if y.ndim != 1 or np.any(y <= 0):
        raise ValidationError("y grid must be a 1-d array of positive values")
    if np.any(np.diff(y) <= 0):
        raise ValidationError("y grid must be strictly increasing")
    ys = em.y
    w = em.weights
    cum = np.concatenate(([0.0], np.cumsum(w)))
    N = cum[np.searchsorted(ys, y, side="right")]
    h = moll.width(y)
    lo = np.searchsorted(ys, y - h, side="right")
    hi = np.searchsorted(ys, y + h, side="left")
    Ns = np.empty_like(y)
    rho = np.empty_like(y)
    for i in range(y.size):
        s = (y[i] - ys[lo[i]:hi[i]]) / h[i]
        wi = w[lo[i]:hi[i]]
        Ns[i] = cum[lo[i]] + float(wi @ moll.cdf(s))
        rho[i] = float(wi @ moll.phi(s)) / h[i]
    return CountingCurve(y, N, Ns, rho, rule_scale(em), moll)


# -- clustering windows ----------------------------------------------------------------

@dataclass
class WindowStats:
    C: float
    delta: float
    jump_total: float
    cluster_count: int
    mbar: float | None

    def to_dict(self) -> dict:
        return {"C": self.C, "delta": self.delta, "jump_total": self.jump_total,
                "cluster_count": self.cluster_count, "mbar": self.mbar}


def window_stats(em: EncodedMeasure, C: float, delta: float) -> WindowStats:
    """Weight and number of distinct atoms in the closed window [C - delta, C]."""
    if not delta > 0:
        raise ValidationError("delta must be positive")
    inside = (em.C >= C - delta) & (em.C <= C)
    count = int(inside.sum())
    jump = float(em.weights[inside].sum())
    return WindowStats(float(C), float(delta), jump, count, jump / count if count else None)


@dataclass
class HitProbability:
    analytic: float
    empirical: float
    trials: int

    @property
    def sigma(self) -> float:
        p = self.analytic
        return math.sqrt(p * (1 - p) / self.trials)


def edge_hit_probability(ell: int, d: int, epsilon: float, delta: float,
                         trials: int = 100_000, seed: int = 0) -> HitProbability:
    """Chance that a randomly offset window [C - delta, C] contains the cluster C_ell.

    C = C_ell + U with U uniform on one cell of length epsilon (2 ell + d).
    """
    if ell < 0 or d < 1 or not epsilon > 0 or not delta > 0 or trials < 1:
        raise ValidationError("invalid edge-hit parameters")
    cell = epsilon * (2 * ell + d)
    if not delta < cell:
        raise ValidationError(f"window delta={delta} spans a full cell of length {cell}")
    c_ell = math.pi - epsilon * ell * (ell + d - 1)
    rng = np.random.default_rng(seed)
    C = c_ell + rng.uniform(0.0, cell, size=trials)
    hits = (C - delta <= c_ell) & (c_ell <= C)
    return HitProbability(delta / cell, float(hits.mean()), trials)
