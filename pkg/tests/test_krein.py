import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgeweyl.encoding import Affine, encode
from edgeweyl.errors import BreakdownError, DomainError, PositivityError, ValidationError
from edgeweyl.krein import (AtomicMeasurePlus, JacobiOperator, jacobi_spectrum,
                            jacobi_to_string, measure_to_jacobi, realize, realize_encoded,
                            weyl_function)


def stieltjes_oracle(y, w, dps=60):
    """Monic three-term recurrence in multiprecision; returns (alpha, beta)."""
    with mpmath.workdps(dps):
        ys = [mpmath.mpf(float(v)) for v in y]
        ws = [mpmath.mpf(float(v)) for v in w]
        prev = [mpmath.mpf(0)] * len(ys)
        cur = [mpmath.mpf(1)] * len(ys)
        norm_prev = None
        alpha, beta = [], []
        for k in range(len(ys)):
            norm = mpmath.fsum(wi * p * p for wi, p in zip(ws, cur))
            a = mpmath.fsum(wi * yi * p * p for wi, yi, p in zip(ws, ys, cur)) / norm
            alpha.append(float(a))
            b2 = norm / norm_prev if norm_prev is not None else mpmath.mpf(0)
            if k:
                beta.append(float(mpmath.sqrt(b2)))
            nxt = [(yi - a) * p - b2 * q for yi, p, q in zip(ys, cur, prev)]
            prev, cur, norm_prev = cur, nxt, norm
        return np.array(alpha), np.array(beta)


def test_weyl_function_examples():
    mu = AtomicMeasurePlus([5.0], [2.0])
    assert weyl_function(mu, 1j) == pytest.approx((10 + 2j) / 26, rel=1e-15)
    mu2 = AtomicMeasurePlus([1.0, 3.0], [1.0, 1.0])
    assert weyl_function(mu2, 2.0) == 0
    with pytest.raises(DomainError):
        weyl_function(mu2, 3.0)


def test_jacobi_examples():
    J = measure_to_jacobi(AtomicMeasurePlus([5.0], [2.0]))
    assert J.diag.tolist() == [5.0] and J.total_mass == 2.0
    J = measure_to_jacobi(AtomicMeasurePlus([1.0, 3.0], [1.0, 1.0]))
    np.testing.assert_allclose(J.diag, [2, 2], rtol=1e-15)
    np.testing.assert_allclose(J.offdiag, [1], rtol=1e-15)


def test_jacobi_breakdown_on_duplicate():
    with pytest.raises(BreakdownError) as info:
        measure_to_jacobi(([1.0, 2.0, 2.0], [1.0, 1.0, 1.0]))
    assert info.value.index == 2


def test_jacobi_spectrum_examples():
    mu = jacobi_spectrum(JacobiOperator([5.0], [], 2.0))
    assert mu.points.tolist() == [5.0] and mu.weights.tolist() == [2.0]
    mu = jacobi_spectrum(JacobiOperator([2.0, 2.0], [1.0], 2.0))
    np.testing.assert_allclose(mu.points, [1, 3], rtol=1e-15)
    np.testing.assert_allclose(mu.weights, [1, 1], rtol=1e-14)


def test_jacobi_against_multiprecision():
    rng = np.random.default_rng(11)
    y = np.sort(rng.uniform(0.1, 50, 12))
    w = rng.uniform(0.5, 3, 12)
    J = measure_to_jacobi(AtomicMeasurePlus(y, w))
    a, b = stieltjes_oracle(y, w)
    np.testing.assert_allclose(J.diag, a, rtol=1e-10)
    np.testing.assert_allclose(J.offdiag, b, rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_roundtrip_random(n, seed):
    rng = np.random.default_rng(seed)
    y = np.sort(rng.choice(np.arange(1, 400), size=n, replace=False) * 0.25)
    mu = AtomicMeasurePlus(y, rng.uniform(0.1, 10, n))
    back = jacobi_spectrum(measure_to_jacobi(mu))
    np.testing.assert_allclose(back.points, mu.points, rtol=1e-9)
    np.testing.assert_allclose(back.weights, mu.weights, rtol=1e-9)


def test_single_atom_string():
    r = realize(AtomicMeasurePlus([4.0], [3.0]))
    assert len(r.string.coefficients) == 2
    assert r.string.weyl(1j) == pytest.approx(3 / (4 - 1j), rel=1e-12)


def test_quadratic_encoder():
    kappa, N = 0.1, 10
    x = kappa * (np.arange(N) + 1.0) ** 2
    r = realize(AtomicMeasurePlus(x, np.ones(N)))
    assert all(c > 0 for c in r.string.coefficients)
    assert r.match_residual <= 1e-8
    assert r.roundtrip_residual <= 1e-9


def test_zero_point_rejected():
    with pytest.raises(ValidationError):
        AtomicMeasurePlus([0.0, 1.0], [1.0, 1.0])
    J = measure_to_jacobi(([0.0, 1.0], [1.0, 1.0]))
    with pytest.raises(PositivityError) as info:
        jacobi_to_string(J)
    assert info.value.index >= 1


def test_realize_encoded_s3(s3_small):
    r = realize_encoded(encode(s3_small, Affine(1.0)), 6)
    assert r.measure.points.tolist() == [3, 8, 15, 24, 35, 48]
    assert r.measure.weights.tolist() == [4, 9, 16, 25, 36, 49]
    assert r.roundtrip_residual <= 1e-9
    assert r.match_residual <= 1e-8


def test_realize_encoded_needs_atoms(s3_small):
    with pytest.raises(ValidationError):
        realize_encoded(encode(s3_small, Affine(1.0)), 0)


def test_extended_precision_agrees(monkeypatch):
    rng = np.random.default_rng(5)
    mu = AtomicMeasurePlus(np.sort(rng.uniform(0.5, 30, 16)), rng.uniform(1, 2, 16))
    plain = measure_to_jacobi(mu)
    monkeypatch.setenv("EDGEWEYL_PRECISION", "on")
    ext = measure_to_jacobi(mu)
    np.testing.assert_allclose(ext.diag, plain.diag, rtol=1e-10)
    np.testing.assert_allclose(ext.offdiag, plain.offdiag, rtol=1e-10)


def test_atom_cap():
    with pytest.raises(ValidationError):
        AtomicMeasurePlus(np.arange(1, 66, dtype=float), np.ones(65))
