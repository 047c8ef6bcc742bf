"""Affine, polynomial-type and perturbed edge encodings C = g(lambda)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, MonotonicityViolation, ValidationError
from .spectra import SpectralMeasure

PROBE_COUNT = 1024
INVERT_LAMBDA_CAP = 1e300


def log_e(lam):
    """log(e * lam), clamped to lam >= 1 so the value is >= 1 everywhere."""
    return 1.0 + np.log(np.maximum(lam, 1.0))


def loglog_ee(lam):
    """log log(e^e * lam), clamped to lam >= 1 so the value is >= 1 everywhere."""
    return np.log(math.e + np.log(np.maximum(lam, 1.0)))


# -- slowly varying factors ---------------------------------------------------

@dataclass(frozen=True)
class Const:
    ell_inf: float = 1.0

    def __post_init__(self):
        if not self.ell_inf > 0:
            raise ValidationError("Const slow variation needs ell_inf > 0")

    def __call__(self, lam):
        return np.full_like(np.asarray(lam, dtype=float), self.ell_inf)

    @property
    def vanishes(self) -> bool:
        return False


@dataclass(frozen=True)
class LogPower:
    """L(lam) = log(e lam)^alpha; alpha < 0 is the decaying direction."""

    alpha: float

    def __call__(self, lam):
        return log_e(np.asarray(lam, dtype=float)) ** self.alpha

    @property
    def vanishes(self) -> bool:
        return self.alpha < 0


@dataclass(frozen=True)
class LogLogPower:
    """L(lam) = log(e lam)^alpha * loglog(e^e lam)^beta."""

    alpha: float
    beta: float

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return log_e(lam) ** self.alpha * loglog_ee(lam) ** self.beta

    @property
    def vanishes(self) -> bool:
        return self.alpha < 0 or (self.alpha == 0 and self.beta < 0)


SlowVariation = Const | LogPower | LogLogPower


# -- perturbation families delta(lambda) ----------------------------------------
# Each family exposes delta(lam) and its relative-error envelope eta(x).

@dataclass(frozen=True)
class LogDistortion:
    alpha: float = 1.0
    name = "logdistortion"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("LogDistortion needs alpha > 0")

    def delta(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam / log_e(lam) ** self.alpha

    def eta(self, x):
        return 1.0 / log_e(np.asarray(x, dtype=float)) ** self.alpha


@dataclass(frozen=True)
class IterLog:
    alpha: float = 1.0
    beta: float = 1.0
    name = "iterlog"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("IterLog needs alpha > 0")

    def delta(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam * self.eta(lam)

    def eta(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (log_e(x) ** self.alpha * loglog_ee(x) ** self.beta)


@dataclass(frozen=True)
class SlowFactor:
    L: SlowVariation = field(default_factory=lambda: LogPower(-0.5))
    name = "slowfactor"

    def __post_init__(self):
        if not self.L.vanishes:
            raise ValidationError("SlowFactor needs a slowly varying L tending to 0")

    def delta(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam * self.L(lam)

    def eta(self, x):
        return self.L(x)


@dataclass(frozen=True)
class BoundedOffset:
    c: float = 2.0
    name = "boundedoffset"

    def delta(self, lam):
        return np.full_like(np.asarray(lam, dtype=float), self.c)

    def eta(self, x):
        return 1.0 / np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SubLog:
    beta: float = 0.5
    name = "sublog"

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValidationError("SubLog needs 0 < beta < 1")

    def delta(self, lam):
        return log_e(np.asarray(lam, dtype=float)) ** self.beta

    def eta(self, x):
        # growth bound |delta'| <= ell/lam with ell = beta log(e x)^(beta-1)
        return self.beta * log_e(np.asarray(x, dtype=float)) ** (self.beta - 1)


@dataclass(frozen=True)
class OscBV:
    L: SlowVariation = field(default_factory=lambda: LogPower(-1.0))
    theta_amp: float = 0.5
    theta_rate: float = 1.0
    name = "oscbv"

    def __post_init__(self):
        if not self.L.vanishes:
            raise ValidationError("OscBV needs a slowly varying L tending to 0")
        if not self.theta_rate > 0:
            raise ValidationError("OscBV needs theta_rate > 0")

    def theta(self, lam):
        return self.theta_amp / (1.0 + log_e(np.asarray(lam, dtype=float))) ** self.theta_rate

    def delta(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam * self.L(lam) * (1.0 + self.theta(lam))

    def eta(self, x):
        return self.L(x)


@dataclass(frozen=True)
class SubPower:
    q: float = 0.5
    name = "subpower"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValidationError("SubPower needs 0 < q < 1")

    def delta(self, lam):
        return np.asarray(lam, dtype=float) ** self.q

    def eta(self, x):
        return np.asarray(x, dtype=float) ** (self.q - 1)


PerturbationSpec = LogDistortion | IterLog | SlowFactor | BoundedOffset | SubLog | OscBV | SubPower

FAMILIES: dict[str, type] = {
    cls.name: cls
    for cls in (LogDistortion, IterLog, SlowFactor, BoundedOffset, SubLog, OscBV, SubPower)
}


def default_families() -> list[PerturbationSpec]:
    return [cls() for cls in FAMILIES.values()]


# -- encoding rules --------------------------------------------------------------

@dataclass(frozen=True)
class Affine:
    epsilon: float = 1.0
    a: float = math.pi

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")

    @property
    def edge(self) -> float:
        return self.a

    def __call__(self, lam):
        return self.a - self.epsilon * np.asarray(lam, dtype=float)


@dataclass(frozen=True)
class PolyType:
    """g(lam) = a - b lam^k L(lam)."""

    k: float
    b: float = 1.0
    a: float = math.pi
    L: SlowVariation = field(default_factory=Const)

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError("PolyType needs k > 0")
        if not self.b > 0:
            raise ValidationError("PolyType needs b > 0")

    @property
    def edge(self) -> float:
        return self.a

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.a - self.b * lam ** self.k * self.L(lam)


@dataclass(frozen=True)
class Perturbed:
    """C(lam) = pi - epsilon lam + delta(lam)."""

    epsilon: float
    delta: PerturbationSpec

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")

    @property
    def edge(self) -> float:
        return math.pi

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return math.pi - self.epsilon * lam + self.delta.delta(lam)


EncodingRule = Affine | PolyType | Perturbed


def rule_to_dict(rule: EncodingRule) -> dict[str, Any]:
    def slow(L):
        return {"type": type(L).__name__, **L.__dict__}

    if isinstance(rule, Affine):
        return {"type": "affine", "params": {"a": rule.a, "epsilon": rule.epsilon}}
    if isinstance(rule, PolyType):
        return {"type": "poly", "params": {"a": rule.a, "b": rule.b, "k": rule.k, "L": slow(rule.L)}}
    fam = rule.delta
    params = {}
    for key, val in fam.__dict__.items():
        params[key] = slow(val) if isinstance(val, (Const, LogPower, LogLogPower)) else val
    return {"type": "perturbed",
            "params": {"epsilon": rule.epsilon, "family": fam.name, "delta": params}}


def _slow_from_dict(d: dict[str, Any]) -> SlowVariation:
    d = dict(d)
    kind = d.pop("type")
    return {"Const": Const, "LogPower": LogPower, "LogLogPower": LogLogPower}[kind](**d)


def rule_from_dict(d: dict[str, Any]) -> EncodingRule:
    p = d["params"]
    if d["type"] == "affine":
        return Affine(epsilon=p["epsilon"], a=p["a"])
    if d["type"] == "poly":
        return PolyType(k=p["k"], b=p["b"], a=p["a"], L=_slow_from_dict(p["L"]))
    if d["type"] == "perturbed":
        kw = {k: (_slow_from_dict(v) if isinstance(v, dict) else v) for k, v in p["delta"].items()}
        return Perturbed(p["epsilon"], FAMILIES[p["family"]](**kw))
    raise ValidationError(f"unknown rule type {d['type']!r}")


# -- encoding ---------------------------------------------------------------------

def validate_monotone(rule: EncodingRule, lambdas, lambda_max: float | None = None) -> None:
    """Check strict decrease on the atoms plus log-spaced probes on [lam_min+1, lam_max].

    lam_min is the smallest positive atom; a zero mode is checked as an atom only.
    """
    if isinstance(rule, Affine):
        return
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        return
    top = max(float(lam[-1]), lambda_max or 0.0)
    positive = lam[lam > 0]
    lo = (float(positive[0]) if positive.size else 0.0) + 1.0
    grid = lam
    if top > lo:
        grid = np.union1d(lam, np.geomspace(lo, top, PROBE_COUNT))
    c = rule(grid)
    bad = np.flatnonzero(~(np.diff(c) < 0))
    if bad.size:
        raise MonotonicityViolation(grid[bad[0] + 1])


@dataclass(frozen=True)
class EncodedMeasure:
    """Pushforward atoms (C_n, m_n), sorted strictly decreasing in C."""

    C: np.ndarray
    weights: np.ndarray
    rule: EncodingRule
    source: SpectralMeasure
    above_edge: bool = False

    @property
    def edge(self) -> float:
        return self.rule.edge

    @property
    def y(self) -> np.ndarray:
        """Edge variable edge - C_n (increasing)."""
        return self.edge - self.C

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.C, self.weights)]

    def __len__(self) -> int:
        return self.C.size


def encode(measure: SpectralMeasure, rule: EncodingRule) -> EncodedMeasure:
    validate_monotone(rule, measure.lambdas, measure.lambda_max)
    c = rule(measure.lambdas)
    if c.size > 1 and np.any(np.diff(c) >= 0):
        i = int(np.argmax(np.diff(c) >= 0))
        raise MonotonicityViolation(measure.lambdas[i + 1])
    above = bool(c.size and c[0] > rule.edge)
    if above:
        warnings.warn(f"encoded atoms above the edge {rule.edge:.6g} (max C = {c[0]:.6g})",
                      stacklevel=2)
    return EncodedMeasure(c, measure.weights.copy(), rule, measure, above)


def invert_rule(rule: EncodingRule, C: float) -> float:
    """Lambda with rule(Lambda) = C, for C below rule(0)."""
    if isinstance(rule, Affine):
        lam = (rule.a - C) / rule.epsilon
        if lam < 0:
            raise BracketFailure(f"C={C} lies above rule(0)={rule.a}")
        return lam
    c0 = float(rule(0.0))
    if C > c0:
        raise BracketFailure(f"C={C} lies above rule(0)={c0}")
    if C == c0:
        return 0.0
    f = lambda lam: float(rule(lam)) - C  # noqa: E731
    scale = rule.epsilon if isinstance(rule, Perturbed) else rule.b
    hi = max(1.0, abs(rule.edge - C) / scale)
    while f(hi) > 0:
        hi *= 2.0
        if hi > INVERT_LAMBDA_CAP:
            raise BracketFailure(f"no sign change below lambda cap {INVERT_LAMBDA_CAP:g}")
    lo = 0.0
    # tighten the bracket so brentq's absolute tolerance is relative to the root
    while hi > 2.0 and f(hi / 2) < 0:
        hi /= 2
    lo = hi / 2 if hi > 2.0 else 0.0
    lam = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(lam)) > 1e-10 * max(1.0, abs(C)):
        raise BracketFailure(f"inversion residual {f(lam):.3g} at C={C}")
    return lam


def theoretical_envelope(rule: EncodingRule, y):
    """Relative-error envelope eta(y/epsilon) of the perturbed family (1/y for offsets)."""
    if not isinstance(rule, Perturbed):
        raise ValidationError("envelope is defined for perturbed rules only")
    y = np.asarray(y, dtype=float)
    if isinstance(rule.delta, BoundedOffset):
        return 1.0 / y
    return rule.delta.eta(y / rule.epsilon)
