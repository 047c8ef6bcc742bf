"""Finite Krein-string realization of an atomic measure on (0, inf).

Pipeline: measure -> Jacobi matrix (discretized Stieltjes / Lanczos on the
discrete inner product) -> qd factorization -> Stieltjes continued fraction

    m(z) = 1/(-z m_1 + 1/(l_1 + 1/(-z m_2 + ... + 1/l_N)))

whose masses m_k and lengths l_k are the string coefficients.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .encoding import Affine, EncodedMeasure
from .errors import BreakdownError, DomainError, NumericalError, PositivityError, ValidationError

MAX_ATOMS = 64
BREAKDOWN_RTOL = 1e-12
QD_RTOL = 64 * np.finfo(float).eps


def extended_precision() -> bool:
    return os.environ.get("EDGEWEYL_PRECISION", "off").strip().lower() in ("on", "1", "true", "yes")


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    if extended_precision():
        return math.fsum(a * b)
    return float(a @ b)


@dataclass(frozen=True)
class AtomicMeasurePlus:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", y)
        object.__setattr__(self, "weights", w)
        if y.ndim != 1 or y.shape != w.shape or y.size == 0:
            raise ValidationError("need matching nonempty 1-d points and weights")
        if y.size > MAX_ATOMS:
            raise ValidationError(f"at most {MAX_ATOMS} atoms supported, got {y.size}")
        if np.any(y <= 0):
            raise ValidationError("support must lie in (0, inf)")
        if np.any(w <= 0):
            raise ValidationError("weights must be positive")
        if np.any(np.diff(y) <= 0):
            raise ValidationError("points must be strictly increasing")

    @classmethod
    def from_unsorted(cls, points, weights) -> "AtomicMeasurePlus":
        y = np.asarray(points, dtype=float)
        order = np.argsort(y, kind="stable")
        return cls(y[order], np.asarray(weights, dtype=float)[order])

    def __len__(self) -> int:
        return self.points.size

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def finite_length_integral(self) -> float:
        """int (1 + t)^(-1) dmu, finite for every finite measure."""
        return float(np.sum(self.weights / (1.0 + self.points)))


def weyl_function(mu: AtomicMeasurePlus, z: complex) -> complex:
    """m(z) = sum w / (y - z)."""
    z = complex(z)
    if z.imag == 0 and np.any(mu.points == z.real):
        raise DomainError(f"z={z} coincides with a support point")
    return complex(np.sum(mu.weights / (mu.points - z)))


@dataclass(frozen=True)
class JacobiOperator:
    diag: np.ndarray
    offdiag: np.ndarray
    total_mass: float

    def __post_init__(self):
        a = np.asarray(self.diag, dtype=float)
        b = np.asarray(self.offdiag, dtype=float)
        object.__setattr__(self, "diag", a)
        object.__setattr__(self, "offdiag", b)
        if b.size != max(a.size - 1, 0):
            raise ValidationError("offdiag must have length len(diag) - 1")
        if np.any(b <= 0):
            raise ValidationError("offdiagonal entries must be strictly positive")
        if not self.total_mass > 0:
            raise ValidationError("total mass must be positive")

    @property
    def size(self) -> int:
        return self.diag.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def measure_to_jacobi(mu) -> JacobiOperator:
    """Recurrence coefficients of the orthonormal polynomials of a discrete measure.

    ``mu`` is an AtomicMeasurePlus or a raw (points, weights) pair; the raw form
    skips validation so duplicated points surface as a recurrence breakdown.
    Runs Lanczos on diag(y) from sqrt(w) with full reorthogonalization.
    """
    if isinstance(mu, AtomicMeasurePlus):
        y, w = mu.points, mu.weights
    else:
        y, w = (np.asarray(v, dtype=float) for v in mu)
    n = y.size
    if n == 0:
        raise ValidationError("empty measure")
    mass = float(w.sum())
    scale = float(np.max(np.abs(y))) or 1.0
    V = np.zeros((n, n))
    v = np.sqrt(w / mass)
    alpha = np.zeros(n)
    beta = np.zeros(max(n - 1, 0))
    prev = np.zeros(n)
    b_prev = 0.0
    for k in range(n):
        V[:, k] = v
        alpha[k] = _dot(y * v, v)
        if k == n - 1:
            break
        r = y * v - alpha[k] * v - b_prev * prev
        for _ in range(2):
            r -= V[:, : k + 1] @ (V[:, : k + 1].T @ r)
        b = math.sqrt(_dot(r, r))
        if b <= BREAKDOWN_RTOL * scale:
            raise BreakdownError(k + 1, f"Stieltjes breakdown at step {k + 1} "
                                        "(duplicate or numerically coincident support points)")
        beta[k] = b
        prev, v, b_prev = v, r / b, b
    return JacobiOperator(alpha, beta, mass)


def jacobi_spectrum(J: JacobiOperator) -> AtomicMeasurePlus:
    """Eigenvalues of J with weights mass * (first eigenvector component)^2."""
    try:
        vals, vecs = eigh_tridiagonal(J.diag, J.offdiag)
    except Exception as exc:  # LAPACK failure
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    return AtomicMeasurePlus(vals, J.total_mass * vecs[0, :] ** 2)


@dataclass(frozen=True)
class StieltjesString:
    masses: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        if np.any(self.masses <= 0) or np.any(self.lengths <= 0):
            raise ValidationError("string coefficients must be strictly positive")

    @property
    def coefficients(self) -> list[float]:
        """Interleaved (m_1, l_1, m_2, l_2, ...)."""
        out = np.empty(2 * self.masses.size)
        out[0::2] = self.masses
        out[1::2] = self.lengths
        return out.tolist()

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def weyl(self, z: complex) -> complex:
        """Bottom-up evaluation of the continued fraction."""
        z = complex(z)
        val = complex(self.lengths[-1])
        for k in range(self.masses.size - 1, -1, -1):
            val = -z * self.masses[k] + 1.0 / val
            if k > 0:
                val = self.lengths[k - 1] + 1.0 / val
        return 1.0 / val


def qd_factor(J: JacobiOperator) -> tuple[np.ndarray, np.ndarray]:
    """Forward qd: alpha_1 = q_1, alpha_k = q_k + e_{k-1}, beta_k^2 = q_k e_k."""
    n = J.size
    tol = QD_RTOL * float(np.max(np.abs(J.diag)) + (np.max(J.offdiag) if n > 1 else 0.0))
    q = np.zeros(n)
    e = np.zeros(max(n - 1, 0))
    for k in range(n):
        q[k] = J.diag[k] - (e[k - 1] if k else 0.0)
        if q[k] <= tol:
            raise PositivityError(2 * k + 1, f"q_{k + 1} = {q[k]:.3g} not positive "
                                             "(support touches 0 or conditioning loss)")
        if k < n - 1:
            e[k] = J.offdiag[k] ** 2 / q[k]
            if e[k] <= 0:
                raise PositivityError(2 * k + 2, f"e_{k + 1} = {e[k]:.3g} not positive")
    return q, e


def jacobi_to_string(J: JacobiOperator) -> StieltjesString:
    """m_k = 1/c_k, l_k = c_k/q_k, c_{k+1} = l_k e_k, starting from c_1 = total mass."""
    q, e = qd_factor(J)
    masses = np.zeros(J.size)
    lengths = np.zeros(J.size)
    c = J.total_mass
    for k in range(J.size):
        masses[k] = 1.0 / c
        lengths[k] = c / q[k]
        if k < J.size - 1:
            c = lengths[k] * e[k]
    return StieltjesString(masses, lengths)


def default_probe_points(n: int = 10) -> np.ndarray:
    return 1j * np.geomspace(0.1, 10.0, n)


def weyl_match_residual(string: StieltjesString, mu: AtomicMeasurePlus, zs=None) -> float:
    zs = default_probe_points() if zs is None else zs
    worst = 0.0
    for z in zs:
        ref = weyl_function(mu, z)
        worst = max(worst, abs(string.weyl(z) - ref) / abs(ref))
    return worst


def roundtrip_residual(mu: AtomicMeasurePlus, back: AtomicMeasurePlus) -> float:
    if len(back) != len(mu):
        return math.inf
    dp = np.max(np.abs(back.points - mu.points) / np.abs(mu.points))
    dw = np.max(np.abs(back.weights - mu.weights) / mu.weights)
    return float(max(dp, dw))


@dataclass
class Realization:
    measure: AtomicMeasurePlus
    jacobi: JacobiOperator
    string: StieltjesString
    match_residual: float
    roundtrip_residual: float

    def to_dict(self) -> dict:
        return {"coefficients": self.string.coefficients,
                "masses": self.string.masses.tolist(),
                "lengths": self.string.lengths.tolist(),
                "match_residual": self.match_residual,
                "roundtrip_residual": self.roundtrip_residual,
                "n_atoms": len(self.measure),
                "points": self.measure.points.tolist(),
                "weights": self.measure.weights.tolist()}


def realize(mu: AtomicMeasurePlus) -> Realization:
    J = measure_to_jacobi(mu)
    string = jacobi_to_string(J)
    back = jacobi_spectrum(J)
    return Realization(mu, J, string, weyl_match_residual(string, mu), roundtrip_residual(mu, back))


def realize_encoded(em: EncodedMeasure, n_keep: int) -> Realization:
    """Realize the lowest ``n_keep`` atoms with y = edge - C > 0 (zero modes dropped)."""
    if not isinstance(em.rule, Affine):
        raise ValidationError("Krein realization of mu_C is defined for affine encodings")
    if n_keep < 1:
        raise ValidationError("n_keep must be >= 1")
    if n_keep > MAX_ATOMS:
        raise ValidationError(f"n_keep must be <= {MAX_ATOMS}")
    y = em.edge - em.C
    pos = y > 0
    yk, wk = y[pos][:n_keep], em.weights[pos][:n_keep]
    if yk.size == 0:
        raise ValidationError("no atoms strictly below the edge")
    return realize(AtomicMeasurePlus(yk, wk))
