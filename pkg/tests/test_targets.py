import math

import numpy as np
import pytest

from mindex.targets import (LinkFunction, MultiIndexTarget, eval_target,
                            generate_dataset, hermite_poly, make_subspace,
                            make_target)
from conftest import gauss_hermite_expectation


class TestHermite:
    def test_h0_is_one_everywhere(self):
        assert hermite_poly(0, 7.3) == 1.0

    def test_h2_at_zero(self):
        assert hermite_poly(2, 0.0) == pytest.approx(-1.0 / math.sqrt(2), abs=1e-15)

    def test_h4_at_zero(self):
        assert hermite_poly(4, 0.0) == pytest.approx(3.0 / math.sqrt(24), abs=1e-15)

    def test_vectorized_matches_scalar(self):
        z = np.linspace(-3, 3, 11)
        got = hermite_poly(3, z)
        want = [hermite_poly(3, float(v)) for v in z]
        assert np.allclose(got, want, rtol=0, atol=0)

    @pytest.mark.parametrize("j", range(7))
    @pytest.mark.parametrize("k", range(7))
    def test_orthonormality(self, j, k):
        val = gauss_hermite_expectation(
            lambda z: hermite_poly(j, z) * hermite_poly(k, z))
        assert abs(val - (1.0 if j == k else 0.0)) <= 1e-10

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError):
            hermite_poly(-1, 0.0)


class TestSubspace:
    def test_axis_aligned_rows(self):
        sub = make_subspace(4, 2, "axis_aligned")
        assert np.array_equal(sub.U, np.eye(4)[:2])

    @pytest.mark.parametrize("d,r", [(8, 3), (50, 5), (3, 3)])
    def test_random_orthonormal(self, d, r):
        sub = make_subspace(d, r, "random", seed=11)
        gram = sub.U @ sub.U.T
        assert np.max(np.abs(gram - np.eye(r))) <= 1e-12

    def test_full_rank_square(self):
        sub = make_subspace(3, 3, "random", seed=0)
        assert abs(abs(np.linalg.det(sub.U)) - 1.0) <= 1e-10

    def test_r_greater_than_d_rejected(self):
        with pytest.raises(ValueError):
            make_subspace(3, 4)

    def test_random_deterministic(self):
        a = make_subspace(10, 2, "random", seed=5)
        b = make_subspace(10, 2, "random", seed=5)
        assert np.array_equal(a.U, b.U)


class TestEvalTarget:
    def test_quad2d_unit_point(self):
        t = make_target("quad2d", d=6)
        x = np.zeros(6); x[0] = 1.0; x[1] = 1.0
        assert eval_target(t, x) == pytest.approx(1.5 / math.sqrt(2.5), abs=1e-14)

    def test_quad2d_zero(self):
        t = make_target("quad2d", d=4)
        assert eval_target(t, np.zeros(4)) == 0.0

    def test_hermite4sum_zero(self):
        t = make_target("hermite4sum", d=5)
        assert eval_target(t, np.zeros(5)) == pytest.approx(
            6.0 / math.sqrt(24), abs=1e-14)

    def test_irrelevant_coordinate_permutation_bit_identical(self, rng):
        # axis-aligned target only sees the first r coordinates
        t = make_target("quad2d", d=10)
        X = rng.standard_normal((20, 10))
        Xp = X.copy()
        Xp[:, 2:] = Xp[:, 2:][:, ::-1]
        assert np.array_equal(t(X), t(Xp))

    def test_link_arity_mismatch_rejected(self):
        sub = make_subspace(5, 3, "random", seed=1)
        with pytest.raises(ValueError):
            MultiIndexTarget(subspace=sub, link=LinkFunction("quad2d"))

    def test_polynomial_link_matches_direct_eval(self, rng):
        # g(z1, z2) = 2 z1^2 z2 - 0.5 z2 + 1
        link = LinkFunction("polynomial",
                            coeffs={(2, 1): 2.0, (0, 1): -0.5, (0, 0): 1.0})
        z = rng.standard_normal((50, 2))
        want = 2 * z[:, 0] ** 2 * z[:, 1] - 0.5 * z[:, 1] + 1.0
        assert np.allclose(link(z), want, rtol=0, atol=1e-14)
        assert link.degree == 3


class TestDataset:
    def test_same_seed_bit_identical(self):
        t = make_target("quad2d", d=7)
        a = generate_dataset(t, 64, seed=3)
        b = generate_dataset(t, 64, seed=3)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_column_means_near_zero(self):
        t = make_target("quad2d", d=8)
        ds = generate_dataset(t, 100_000, seed=21)
        assert np.max(np.abs(ds.X.mean(axis=0))) <= 0.02

    def test_column_variances_near_one(self):
        t = make_target("quad2d", d=8)
        ds = generate_dataset(t, 100_000, seed=22)
        v = ds.X.var(axis=0)
        assert v.min() >= 0.97 and v.max() <= 1.03

    def test_labels_match_target(self, rng):
        t = make_target("hermite4sum", d=6)
        ds = generate_dataset(t, 32, seed=9)
        assert np.array_equal(ds.y, t(ds.X))

    def test_empty_rejected(self):
        t = make_target("quad2d", d=4)
        with pytest.raises(ValueError):
            generate_dataset(t, 0, seed=0)


def test_quad2d_link_moments():
    # Frozen from the Gaussian-moment oracle: E[g] = 1.5/sqrt(2.5),
    # E[g^2] = (3 + 1 + 3/4)/2.5 = 1.9, so the variance is exactly 1.
    # Checked here by tensorized Gauss-Hermite quadrature.
    x, w = np.polynomial.hermite.hermgauss(40)
    z = np.sqrt(2.0) * x
    wz = w / np.sqrt(np.pi)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    G = (Z1 ** 2 + 0.5 * Z2 ** 2) / np.sqrt(2.5)
    W2 = np.outer(wz, wz)
    assert float((W2 * G).sum()) == pytest.approx(1.5 / math.sqrt(2.5), abs=1e-12)
    assert float((W2 * G * G).sum()) == pytest.approx(1.9, abs=1e-12)
