"""Shared test oracles: quadrature against the Gaussian and finite differences."""
import numpy as np
import pytest


def gauss_hermite_expectation(fn, order=80):
    """E[fn(Z)] for Z ~ N(0,1) by Gauss-Hermite quadrature (independent of
    any library recurrence: nodes/weights come from numpy's polynomial
    module, the integrand is evaluated directly)."""
    x, w = np.polynomial.hermite.hermgauss(order)
    z = np.sqrt(2.0) * x
    return float((w / np.sqrt(np.pi)) @ fn(z))


def central_diff_grad(f, x0, step=1e-5):
    """Central finite differences of a scalar function of a flat array."""
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        xp = x0.copy(); xp.flat[i] += step
        xm = x0.copy(); xm.flat[i] -= step
        g.flat[i] = (f(xp) - f(xm)) / (2.0 * step)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
