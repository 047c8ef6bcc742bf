"""Truncated Laplace spectra of model geometries, with multiplicities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import spherical_jn

from .errors import ConvergenceError, EnumerationCapExceeded, ValidationError

MERGE_RTOL = 1e-12
BESSEL_XTOL = 1e-12
DEFAULT_LATTICE_CAP = 20_000_000


class Atom(NamedTuple):
    lam: float
    weight: float


def unit_ball_volume(d: int) -> float:
    """omega_d = pi^(d/2) / Gamma(d/2 + 1)."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_volume(d: int) -> float:
    """Volume of the unit round sphere S^d."""
    return 2 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


def weyl_constant(d: int, volume: float) -> float:
    return unit_ball_volume(d) * volume / (2 * math.pi) ** d


@dataclass(frozen=True)
class SpectralMeasure:
    """Sorted atomic measure sum_n m_n delta_{lambda_n} truncated at ``lambda_max``."""

    lambdas: np.ndarray
    weights: np.ndarray
    lambda_max: float
    dimension: int | None = None
    volume: float | None = None
    gamma_expected: float | None = None
    label: str = ""
    generator: str = ""
    params: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lambdas, dtype=float)
        w = np.ascontiguousarray(self.weights, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", w)
        if lam.ndim != 1 or lam.shape != w.shape:
            raise ValidationError("lambdas and weights must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(w))):
            raise ValidationError("non-finite eigenvalue or weight")
        if lam.size and lam[0] < 0:
            raise ValidationError(f"negative eigenvalue {lam[0]}")
        if np.any(w <= 0):
            i = int(np.argmax(w <= 0))
            raise ValidationError(f"nonpositive weight {w[i]} at lambda={lam[i]}")
        if np.any(np.diff(lam) <= 0):
            i = int(np.argmax(np.diff(lam) <= 0))
            raise ValidationError(f"eigenvalues not strictly increasing at index {i + 1}")
        if not self.lambda_max >= 0:
            raise ValidationError("lambda_max must be nonnegative")
        if lam.size and lam[-1] > self.lambda_max * (1 + MERGE_RTOL):
            raise ValidationError(f"atom {lam[-1]} above lambda_max={self.lambda_max}")
        if self.dimension is not None and self.dimension < 1:
            raise ValidationError("dimension must be a positive integer")
        if self.volume is not None and not self.volume > 0:
            raise ValidationError("volume must be positive")
        if self.gamma_expected is not None and not self.gamma_expected > 0:
            raise ValidationError("gamma_expected must be positive")

    def __len__(self) -> int:
        return self.lambdas.size

    @property
    def atoms(self) -> list[Atom]:
        return [Atom(float(a), float(b)) for a, b in zip(self.lambdas, self.weights)]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def omega(self) -> float | None:
        return None if self.dimension is None else unit_ball_volume(self.dimension)

    def truncate(self, lambda_max: float) -> "SpectralMeasure":
        keep = self.lambdas <= lambda_max
        return _replace(self, lambdas=self.lambdas[keep], weights=self.weights[keep],
                        lambda_max=float(min(lambda_max, self.lambda_max)))

    def metadata(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "dimension": self.dimension,
            "volume": self.volume,
            "gamma_expected": self.gamma_expected,
            "lambda_max": self.lambda_max,
            "generator": self.generator,
            "params": self.params,
            "seed": self.seed,
        }


def _replace(sm: SpectralMeasure, **kw) -> SpectralMeasure:
    d = {k: getattr(sm, k) for k in sm.__dataclass_fields__}
    d.update(kw)
    return SpectralMeasure(**d)


def merge_atoms(lambdas, weights, rtol: float = MERGE_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Sort and merge eigenvalues closer than ``rtol`` (relative), summing weights."""
    lam = np.asarray(lambdas, dtype=float)
    w = np.asarray(weights, dtype=float)
    if lam.size == 0:
        return lam, w
    order = np.argsort(lam, kind="stable")
    lam, w = lam[order], w[order]
    gap = np.diff(lam) > rtol * np.maximum(1.0, np.abs(lam[1:]))
    starts = np.concatenate(([0], np.flatnonzero(gap) + 1))
    return lam[starts], np.add.reduceat(w, starts)


# -- round spheres ---------------------------------------------------------

def sphere_multiplicity(ell: int, d: int) -> int:
    m = math.comb(ell + d, ell)
    if ell >= 2:
        m -= math.comb(ell + d - 2, ell - 2)
    return m


def sphere_spectrum(d: int, lambda_max: float) -> SpectralMeasure:
    if d < 1:
        raise ValidationError("sphere dimension must be >= 1")
    if not lambda_max >= 0:
        raise ValidationError("lambda_max must be nonnegative")
    # largest ell with ell(ell + d - 1) <= lambda_max
    ell_max = int(math.floor((-(d - 1) + math.sqrt((d - 1) ** 2 + 4 * lambda_max)) / 2))
    while ell_max >= 0 and ell_max * (ell_max + d - 1) > lambda_max:
        ell_max -= 1
    while (ell_max + 1) * (ell_max + d) <= lambda_max:
        ell_max += 1
    ells = range(ell_max + 1)
    lam = np.array([ell * (ell + d - 1) for ell in ells], dtype=float)
    w = np.array([sphere_multiplicity(ell, d) for ell in ells], dtype=float)
    vol = sphere_volume(d)
    return SpectralMeasure(lam, w, float(lambda_max), dimension=d, volume=vol,
                           gamma_expected=weyl_constant(d, vol), label=f"S^{d}",
                           generator="sphere", params={"d": d})


# -- flat tori -------------------------------------------------------------

def _check_gram(gram) -> np.ndarray:
    g = np.atleast_2d(np.asarray(gram, dtype=float))
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError("gram must be a square matrix")
    if not np.allclose(g, g.T, rtol=0, atol=1e-14 * np.abs(g).max()):
        raise ValidationError("gram must be symmetric")
    if np.linalg.eigvalsh(g).min() <= 0:
        raise ValidationError("gram must be positive definite")
    return g


def torus_spectrum(gram, lambda_max: float, cap: int = DEFAULT_LATTICE_CAP) -> SpectralMeasure:
    """Eigenvalues k^T G k over integer vectors k, G the dual-lattice Gram matrix.

    The torus volume is (2 pi)^d / sqrt(det G), so gamma = omega_d / sqrt(det G).
    """
    g = _check_gram(gram)
    if not lambda_max >= 0:
        raise ValidationError("lambda_max must be nonnegative")
    d = g.shape[0]
    ginv = np.linalg.inv(g)
    half = np.floor(np.sqrt(lambda_max * np.diag(ginv)) + 1e-9).astype(int)
    box = int(np.prod(2 * half + 1))
    if box > cap:
        raise EnumerationCapExceeded(cap, box)
    axes = [np.arange(-h, h + 1) for h in half]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d).astype(float)
    q = np.einsum("ni,ij,nj->n", pts, g, pts)
    q = q[q <= lambda_max * (1 + MERGE_RTOL)]
    if q.size > cap:
        raise EnumerationCapExceeded(cap, q.size)
    lam, w = merge_atoms(np.maximum(q, 0.0), np.ones_like(q))
    lam[0] = 0.0
    vol = (2 * math.pi) ** d / math.sqrt(np.linalg.det(g))
    return SpectralMeasure(lam, w, float(lambda_max), dimension=d, volume=vol,
                           gamma_expected=weyl_constant(d, vol), label=f"T^{d}",
                           generator="torus", params={"gram": g.tolist()})


# -- Berger spheres ----------------------------------------------------------

def berger_spectrum(k_param: float, lambda_max: float) -> SpectralMeasure:
    """lambda_{n,m} = n(n+2) + (k^2 - 1) m^2 for |m| <= n, weight n + 1 per pair.

    ``gamma_expected`` is left unset: the stated multiplicity convention does not
    reduce to (n+1)^2 per cluster at k = 1, so no prefactor is asserted.
    """
    if not k_param > 0:
        raise ValidationError("Berger parameter k must be positive")
    if not lambda_max >= 0:
        raise ValidationError("lambda_max must be nonnegative")
    c = k_param ** 2 - 1
    lam, w = [], []
    n = 0
    while True:
        lowest = n * (n + 2) + min(c, 0.0) * n * n
        if lowest > lambda_max:
            break
        m = np.arange(-n, n + 1, dtype=float)
        vals = n * (n + 2) + c * m * m
        keep = vals <= lambda_max
        lam.append(vals[keep])
        w.append(np.full(int(keep.sum()), n + 1.0))
        n += 1
    lam, w = merge_atoms(np.concatenate(lam), np.concatenate(w))
    return SpectralMeasure(lam, w, float(lambda_max), dimension=3,
                           volume=k_param * sphere_volume(3), label=f"Berger(k={k_param:g})",
                           generator="berger", params={"k": k_param})


# -- lens spaces -----------------------------------------------------------

def lens_multiplicity(n: int, p: int, q: int) -> int:
    """Dimension of the Z_p-invariant part of the degree-n harmonics on S^3.

    The generator acts by (z1, z2) -> (zeta z1, zeta^q z2).  Torus weights (a, b)
    of the degree-n harmonics run over {-n, -n+2, ..., n}^2 with charges
    (a+b)/2 on z1 and (a-b)/2 on z2, so invariance is
    (1+q) a + (1-q) b = 0 (mod 2p).
    """
    mod = 2 * p
    vals = np.arange(-n, n + 1, 2, dtype=np.int64)
    ha = np.bincount(((1 + q) * vals) % mod, minlength=mod)
    hb = np.bincount(((1 - q) * vals) % mod, minlength=mod)
    return int(np.dot(ha, hb[(-np.arange(mod)) % mod]))


def lens_spectrum(p: int, q: int, lambda_max: float) -> SpectralMeasure:
    if p < 1:
        raise ValidationError("lens order p must be >= 1")
    if math.gcd(p, q) != 1:
        raise ValidationError(f"p,q not coprime (p={p}, q={q})")
    if not lambda_max >= 0:
        raise ValidationError("lambda_max must be nonnegative")
    lam, w = [], []
    n = 0
    while n * (n + 2) <= lambda_max:
        m = lens_multiplicity(n, p, q)
        if m:
            lam.append(n * (n + 2))
            w.append(m)
        n += 1
    vol = sphere_volume(3) / p
    return SpectralMeasure(np.array(lam, float), np.array(w, float), float(lambda_max),
                           dimension=3, volume=vol, gamma_expected=weyl_constant(3, vol),
                           label=f"L({p},{q})", generator="lens", params={"p": p, "q": q})


# -- Dirichlet ball ----------------------------------------------------------

def _bisect_jn(l: int, lo: np.ndarray, hi: np.ndarray, xtol: float) -> np.ndarray:
    flo = spherical_jn(l, lo)
    fhi = spherical_jn(l, hi)
    bad = np.sign(flo) * np.sign(fhi) > 0
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConvergenceError(f"no sign change of j_{l} on bracket ({lo[i]}, {hi[i]})")
    lo, hi = lo.copy(), hi.copy()
    while np.max(hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        fm = spherical_jn(l, mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def spherical_bessel_zeros(x_max: float, xtol: float = BESSEL_XTOL) -> dict[int, np.ndarray]:
    """Positive zeros of j_l up to ``x_max`` for every l with at least one.

    Zeros of j_l are bracketed by consecutive zeros of j_{l-1} (interlacing);
    j_0 = sin(x)/x supplies the seed lattice k*pi.
    """
    # enough j_0 zeros that every level keeps one bracket beyond x_max
    kmax = int(x_max / math.pi) + int(x_max) + 4
    prev = math.pi * np.arange(1, kmax + 1, dtype=float)
    out = {}
    l = 0
    while True:
        if l > 0:
            if prev.size < 2:
                raise ConvergenceError(f"ran out of interlacing brackets at l={l}")
            prev = _bisect_jn(l, prev[:-1], prev[1:], xtol)
        inside = prev[prev <= x_max]
        if inside.size == 0:
            break
        out[l] = inside
        l += 1
    return out


def ball3_spectrum(lambda_max: float) -> SpectralMeasure:
    """Dirichlet Laplacian on the unit ball in R^3: lambda = x^2, weight 2l+1."""
    if not lambda_max > 0:
        raise ValidationError("lambda_max must be positive")
    zeros = spherical_bessel_zeros(math.sqrt(lambda_max))
    lam = [z ** 2 for z in zeros.values()]
    w = [np.full(z.size, 2.0 * l + 1) for l, z in zeros.items()]
    if lam:
        lam, w = merge_atoms(np.concatenate(lam), np.concatenate(w))
        keep = lam <= lambda_max
        lam, w = lam[keep], w[keep]
    else:
        lam, w = np.empty(0), np.empty(0)
    vol = 4 * math.pi / 3
    return SpectralMeasure(lam, w, float(lambda_max), dimension=3, volume=vol,
                           gamma_expected=weyl_constant(3, vol), label="B^3 Dirichlet",
                           generator="ball3", params={})


# -- synthetic Weyl-law spectra ---------------------------------------------

@dataclass(frozen=True)
class PowerLaw:
    coeff: float
    exponent: float


@dataclass(frozen=True)
class JitterUniform:
    amplitude: float


RemainderModel = PowerLaw | JitterUniform | None


@dataclass(frozen=True)
class SyntheticWeyl:
    d: int
    gamma: float
    remainder: RemainderModel = None
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("d must be >= 1")
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if isinstance(self.remainder, PowerLaw) and not self.remainder.exponent < self.d / 2:
            raise ValidationError("remainder exponent must be < d/2")
        if isinstance(self.remainder, JitterUniform) and not self.remainder.amplitude > 0:
            raise ValidationError("jitter amplitude must be positive")


def _solve_counting(n: np.ndarray, d: int, g: float, c: float, e: float) -> np.ndarray:
    """Solve g*lam^(d/2) + c*lam^e = n for each n by bracketing and bisection."""
    f = lambda lam: g * lam ** (d / 2) + c * lam ** e - n  # noqa: E731
    base = (n / g) ** (2 / d)
    lo, hi = base / 2, base * 2
    for _ in range(200):
        flo, fhi = f(lo), f(hi)
        if np.all(flo < 0) and np.all(fhi > 0):
            break
        lo = np.where(flo < 0, lo, lo / 2)
        hi = np.where(fhi > 0, hi, hi * 2)
    else:
        raise ValidationError("could not bracket synthetic eigenvalues; remainder too large")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        neg = f(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def synthetic_spectrum(spec: SyntheticWeyl, lambda_max: float) -> SpectralMeasure:
    """Unit-weight spectrum with N(lambda_n) = n under the chosen remainder model."""
    if not lambda_max > 0:
        raise ValidationError("lambda_max must be positive")
    d, g, rem = spec.d, spec.gamma, spec.remainder
    slack = rem.amplitude if isinstance(rem, JitterUniform) else 0.0
    n_top = int(math.floor(g * (lambda_max + slack) ** (d / 2))) + 1
    if isinstance(rem, PowerLaw):
        n_top += int(abs(rem.coeff) * max(lambda_max, 1.0) ** max(rem.exponent, 0.0)) + 1
    n = np.arange(1, n_top + 1, dtype=float)
    if isinstance(rem, PowerLaw):
        lam = _solve_counting(n, d, g, rem.coeff, rem.exponent)
    else:
        lam = (n / g) ** (2 / d)
    if isinstance(rem, JitterUniform):
        rng = np.random.default_rng(spec.seed)
        lam = lam + rng.uniform(-rem.amplitude, rem.amplitude, size=lam.size)
    if lam.size and lam[0] < 0:
        raise ValidationError("jitter produced a negative eigenvalue")
    bad = np.flatnonzero(np.diff(lam) <= 0)
    if bad.size:
        raise ValidationError(f"synthetic eigenvalues lose monotonicity at n={int(bad[0]) + 2} "
                              f"(lambda={lam[bad[0]]:.6g}); reduce the remainder amplitude")
    lam = lam[lam <= lambda_max]
    params: dict[str, Any] = {"d": d, "gamma": g}
    if isinstance(rem, PowerLaw):
        params["remainder"] = {"type": "powerlaw", "coeff": rem.coeff, "exponent": rem.exponent}
    elif isinstance(rem, JitterUniform):
        params["remainder"] = {"type": "jitter", "amplitude": rem.amplitude}
    return SpectralMeasure(lam, np.ones_like(lam), float(lambda_max), dimension=d,
                           gamma_expected=g, label=f"synthetic(d={d}, gamma={g:g})",
                           generator="synthetic", params=params, seed=spec.seed)
