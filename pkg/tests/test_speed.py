import math

import numpy as np
import pytest
from scipy.integrate import quad

from svwlab import constant_speed, quadratic_cutoff, table_speed, tanh_speed
from svwlab.errors import InvalidParameterError, IterationFailureError
import svwlab.speed as speed_mod


def test_value_examples(tanh):
    assert tanh.value(0.0) == pytest.approx(2.0)
    assert tanh.value(50.0) == pytest.approx(3.0, abs=1e-12)
    assert tanh.value(1.0) == pytest.approx(2.0 + math.tanh(1.0), rel=1e-14)


def test_tanh_bounds():
    sp = tanh_speed()
    assert (sp.c1, sp.c2, sp.c3) == (1.0, 3.0, 1.0)
    u = np.linspace(-30, 30, 1001)
    c = sp.value(u)
    assert np.all(c >= sp.c1) and np.all(c <= sp.c2)
    cp = sp.derivative(u)
    assert np.all(cp >= 0) and np.all(cp <= sp.c3 + 1e-15)


def test_source_coeff_examples(tanh):
    assert constant_speed(2.0).source_coeff(3.7) == 0.0
    assert tanh.source_coeff(0.0) == pytest.approx(0.125, rel=1e-14)
    # independent scalar evaluation of c'(2)/(4 c(2)) ~ 0.00596
    expected = (1.0 / math.cosh(2.0)) ** 2 / (4.0 * (2.0 + math.tanh(2.0)))
    assert tanh.source_coeff(2.0) == pytest.approx(expected, rel=1e-14)


def test_source_coeff_bound(tanh):
    u = np.linspace(-20, 20, 2001)
    w = tanh.source_coeff(u)
    assert np.all(w >= 0)
    assert np.all(w <= tanh.c3 / (4.0 * tanh.c1) + 1e-15)


def test_primitive_against_quadrature(tanh):
    assert tanh.primitive(0.0) == 0.0
    oracle, err = quad(lambda s: 2.0 + math.tanh(s), 0.0, 1.0, epsabs=1e-13)
    assert tanh.primitive(1.0) == pytest.approx(oracle, abs=1e-11)
    assert oracle == pytest.approx(2.433781, abs=5e-7)
    # odd/even split: C(1) + C(-1) = 2 ln cosh 1
    oracle_neg, _ = quad(lambda s: 2.0 + math.tanh(s), 0.0, -1.0, epsabs=1e-13)
    split = tanh.primitive(1.0) + tanh.primitive(-1.0)
    assert split == pytest.approx(oracle + oracle_neg, abs=1e-11)
    assert split == pytest.approx(2.0 * math.log(math.cosh(1.0)), rel=1e-12)


def test_primitive_monotone_bounds(tanh):
    rng = np.random.default_rng(3)
    r = np.sort(rng.uniform(-8, 8, 41))
    C = tanh.primitive(r)
    inc = np.diff(C) / np.diff(r)
    assert np.all(inc >= tanh.c1 - 1e-12)
    assert np.all(inc <= tanh.c2 + 1e-12)


def test_primitive_inverse_roundtrip(tanh):
    assert tanh.primitive_inverse(0.0) == pytest.approx(0.0, abs=1e-14)
    for r in (-5.0, -1.0, 0.3, 5.0):
        y = tanh.primitive(r)
        assert tanh.primitive_inverse(y) == pytest.approx(r, abs=1e-12)
    # inverse of the quadrature-oracle value
    assert tanh.primitive_inverse(2.433781) == pytest.approx(1.0, abs=1e-6)
    # vectorized with warm start
    r = np.linspace(-4, 4, 200)
    u = tanh.primitive_inverse(tanh.primitive(r), guess=r + 0.05)
    assert np.max(np.abs(u - r)) < 1e-11


def test_primitive_inverse_failure_signals(tanh, monkeypatch):
    monkeypatch.setattr(speed_mod, "_NEWTON_MAXIT", 1)
    with pytest.raises(IterationFailureError):
        tanh.primitive_inverse(tanh.primitive(4.0))


def test_cutoff_examples():
    assert quadratic_cutoff(1.9, 0.5) == 0.0
    assert quadratic_cutoff(3.0, 0.5) == pytest.approx(1.0)
    assert quadratic_cutoff(25.0, 0.1) == pytest.approx(225.0)
    with pytest.raises(InvalidParameterError):
        quadratic_cutoff(1.0, 0.0)


def test_cutoff_properties():
    rng = np.random.default_rng(4)
    xi = rng.uniform(-50, 50, 5000)
    for eps in (0.5, 0.1, 0.025):
        chi = quadratic_cutoff(xi, eps)
        assert np.all(xi * chi >= 0.0)
        assert np.all(chi <= xi * xi + 1e-12)
        order = np.argsort(xi)
        assert np.all(np.diff(chi[order]) >= -1e-12)
        above = xi >= 1.0 / eps
        assert np.all(chi[above] <= eps * xi[above] * chi[above] + 1e-12)


def test_constant_speed():
    sp = constant_speed(2.0)
    assert sp.value(1.7) == 2.0
    assert sp.primitive(3.0) == pytest.approx(6.0)
    assert sp.primitive_inverse(6.0) == pytest.approx(3.0, abs=1e-12)


def test_table_speed_matches_samples():
    u = np.linspace(-6, 6, 121)
    c = 2.0 + np.tanh(u)
    sp = table_speed(u, c)
    probe = np.linspace(-5.5, 5.5, 57)
    assert np.max(np.abs(sp.value(probe) - (2.0 + np.tanh(probe)))) < 2e-4
    assert np.all(sp.derivative(probe) >= 0)
    for r in (-3.0, 0.7, 4.0):
        assert sp.primitive_inverse(sp.primitive(r)) == pytest.approx(r, abs=1e-10)
    # clamped outside the sampled range
    assert sp.value(50.0) == pytest.approx(sp.c2)


def test_table_speed_rejects_bad_samples():
    with pytest.raises(InvalidParameterError):
        table_speed([0.0, 1.0, 0.5], [1.0, 2.0, 3.0])
    with pytest.raises(InvalidParameterError):
        table_speed([0.0, 1.0, 2.0], [2.0, 1.5, 3.0])


def test_invalid_models_raise():
    with pytest.raises(InvalidParameterError):
        tanh_speed(1.0, 1.5)
    with pytest.raises(InvalidParameterError):
        constant_speed(0.0)
