import numpy as np
import pytest

from mindex.losses import LossFunction, loss_value
from mindex.network import (ACTIVATIONS, NetworkParams, forward, grad_W,
                            grad_a, init_kaiming, init_symmetric)
from conftest import central_diff_grad

SMOOTH_ACTS = ["quadratic", "cosine", "cubed_smooth"]
ALL_ACTS = list(ACTIVATIONS)


class TestActivations:
    @pytest.mark.parametrize("kind", ALL_ACTS)
    def test_first_derivative_zero_at_origin(self, kind):
        act = ACTIVATIONS[kind]
        h = 1e-6
        fd1 = (act.f(h) - act.f(-h)) / (2 * h)
        assert abs(fd1 - act.d1_zero) <= 1e-9
        assert act.d1_zero == 0.0

    @pytest.mark.parametrize("kind", ALL_ACTS)
    def test_second_derivative_metadata(self, kind):
        act = ACTIVATIONS[kind]
        h = 1e-4
        fd2 = (act.f(h) - 2 * act.f(0.0) + act.f(-h)) / h ** 2
        assert abs(fd2 - act.d2_zero) <= 1e-6

    def test_smooth_reference_kind_is_normalized(self):
        act = ACTIVATIONS["cubed_smooth"]
        assert act.assumption2
        assert act.d2_zero == 1.0

    def test_cosine_is_experiment_only(self):
        assert not ACTIVATIONS["cosine"].assumption2
        assert ACTIVATIONS["cosine"].d2_zero == -1.0

    def test_locally_quadratic_piecewise(self):
        act = ACTIVATIONS["locally_quadratic"]
        assert act.f(0.5) == 0.25
        assert act.f(2.0) == 3.0
        assert act.f(-2.0) == 3.0
        # continuous and C^1 at the seam
        assert act.f(1.0) == 1.0
        assert abs(act.df(1.0 - 1e-9) - act.df(1.0 + 1e-9)) <= 1e-8

    @pytest.mark.parametrize("kind", ALL_ACTS)
    def test_df_matches_finite_differences(self, kind, rng):
        act = ACTIVATIONS[kind]
        h = 1e-6
        for z in rng.uniform(-3, 3, 100):
            if kind == "locally_quadratic" and abs(abs(z) - 1.0) < 1e-2:
                continue
            fd = (act.f(z + h) - act.f(z - h)) / (2 * h)
            assert abs(fd - act.df(z)) <= 1e-6 * max(1.0, abs(act.df(z)))


class TestInitSymmetric:
    @pytest.mark.parametrize("kind", ALL_ACTS)
    def test_zero_function_at_init(self, kind, rng):
        params = init_symmetric(8, 12, 1e-2, seed=5)
        act = ACTIVATIONS[kind]
        X = rng.standard_normal((40, 12))
        assert np.max(np.abs(forward(params, act, X))) <= 1e-14

    def test_pair_of_two_cancels_exactly(self, rng):
        params = init_symmetric(2, 6, 1e-3, seed=1)
        out = forward(params, ACTIVATIONS["quadratic"], rng.standard_normal(6))
        assert out == 0.0

    def test_feature_norms(self):
        params = init_symmetric(10, 33, 0.37e-2, seed=2)
        norms = np.linalg.norm(params.W, axis=1)
        assert np.max(np.abs(norms - 0.37e-2)) <= 1e-14 * 0.37e-2 + 1e-16

    def test_rademacher_and_mirroring(self):
        m = 12
        params = init_symmetric(m, 5, 1e-2, seed=3)
        assert set(np.unique(params.a)) == {-1.0, 1.0}
        assert params.a.sum() == 0.0
        for j in range(m // 2):
            assert params.a[j] == -params.a[m - 1 - j]
            assert np.array_equal(params.W[j], params.W[m - 1 - j])
        assert np.array_equal(params.b, np.zeros(m))

    def test_odd_width_rejected(self):
        with pytest.raises(ValueError):
            init_symmetric(5, 4, 1e-2, seed=0)

    def test_bad_radius_rejected(self):
        with pytest.raises(ValueError):
            init_symmetric(4, 4, 0.0, seed=0)


class TestForward:
    def test_hand_computed_case(self):
        # m=2, a=(1,-1), w1=w2=eps e1, b=(1,0), sigma=t^2:
        # f(x) = (eps x1 + 1)^2 - (eps x1)^2 = 2 eps x1 + 1
        eps = 0.3
        W = np.zeros((2, 4)); W[:, 0] = eps
        params = NetworkParams(a=np.array([1.0, -1.0]), b=np.array([1.0, 0.0]), W=W)
        x = np.array([0.7, -2.0, 1.0, 3.0])
        got = forward(params, ACTIVATIONS["quadratic"], x)
        assert got == pytest.approx(2 * eps * 0.7 + 1.0, abs=1e-14)

    def test_identical_neurons_cancel(self, rng):
        W = np.tile(rng.standard_normal(5), (2, 1))
        params = NetworkParams(a=np.array([1.0, -1.0]),
                               b=np.array([0.4, 0.4]), W=W)
        assert forward(params, ACTIVATIONS["cosine"], rng.standard_normal(5)) == 0.0

    def test_linear_in_second_layer(self, rng):
        params = init_kaiming(6, 9, seed=4)
        X = rng.standard_normal((17, 9))
        act = ACTIVATIONS["cosine"]
        base = forward(params, act, X)
        doubled = params.copy()
        doubled.a = 2.0 * doubled.a
        assert np.array_equal(forward(doubled, act, X), 2.0 * base)


def _empirical_loss(params_template, act, loss, X, y, theta, shape_W):
    p = params_template.copy()
    mW = shape_W[0] * shape_W[1]
    p.W = theta[:mW].reshape(shape_W)
    p.a = theta[mW:]
    return float(np.mean(loss_value(loss, forward(p, act, X), y)))


class TestGradients:
    @pytest.mark.parametrize("act_kind", SMOOTH_ACTS)
    @pytest.mark.parametrize("loss_kind", ["square", "huber", "pseudo_huber"])
    def test_finite_difference_agreement(self, act_kind, loss_kind, rng):
        d, m, n = 5, 4, 8
        act = ACTIVATIONS[act_kind]
        loss = LossFunction(loss_kind)
        params = init_kaiming(m, d, seed=7)
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        gW = grad_W(params, act, loss, X, y)
        ga = grad_a(params, act, loss, X, y)
        theta0 = np.concatenate([params.W.ravel(), params.a])
        fd = central_diff_grad(
            lambda th: _empirical_loss(params, act, loss, X, y, th, (m, d)),
            theta0, step=1e-5)
        got = np.concatenate([gW.ravel(), ga])
        scale = np.maximum(np.abs(got), 1e-3)
        assert np.max(np.abs(got - fd) / scale) <= 1e-5

    def test_kinked_pairs_away_from_kinks(self, rng):
        # locally_quadratic + l1, checked only where every |w.x+b| and every
        # residual is at least 1e-2 from its kink
        d, m, n = 4, 2, 6
        act = ACTIVATIONS["locally_quadratic"]
        loss = LossFunction("l1")
        for attempt in range(50):
            params = init_kaiming(m, d, seed=100 + attempt)
            params.W *= 3.0
            X = rng.standard_normal((n, d))
            y = rng.standard_normal(n)
            Z = X @ params.W.T + params.b
            f = forward(params, act, X)
            if np.min(np.abs(np.abs(Z) - 1.0)) < 1e-2 or np.min(np.abs(f - y)) < 1e-2:
                continue
            gW = grad_W(params, act, loss, X, y)
            ga = grad_a(params, act, loss, X, y)
            theta0 = np.concatenate([params.W.ravel(), params.a])
            fd = central_diff_grad(
                lambda th: _empirical_loss(params, act, loss, X, y, th, (m, d)),
                theta0, step=1e-6)
            got = np.concatenate([gW.ravel(), ga])
            scale = np.maximum(np.abs(got), 1e-3)
            assert np.max(np.abs(got - fd) / scale) <= 1e-4
            return
        pytest.fail("never found a kink-free configuration")

    def test_zero_derivative_weights_give_zero_grad(self, rng):
        # batch of one with l'(f, y) = 0: huber at an exact fit
        d, m = 3, 2
        params = init_kaiming(m, d, seed=9)
        act = ACTIVATIONS["quadratic"]
        loss = LossFunction("huber")
        x = rng.standard_normal((1, d))
        y = np.array([forward(params, act, x[0])])
        assert np.array_equal(grad_W(params, act, loss, x, y), np.zeros((m, d)))
        assert np.array_equal(grad_a(params, act, loss, x, y), np.zeros(m))

    def test_symmetric_init_square_loss_row_formula(self, rng):
        # at the zero-function init, l'(0, y) = -y, so row j of grad_W is
        # -a_j (1/n) sum_i y_i sigma'(w_j.x_i) x_i
        d, m, n = 6, 4, 10
        params = init_symmetric(m, d, 1e-3, seed=3)
        act = ACTIVATIONS["cubed_smooth"]
        loss = LossFunction("square")
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        got = grad_W(params, act, loss, X, y)
        want = np.empty_like(got)
        for j in range(m):
            sp = act.df(X @ params.W[j])
            want[j] = -params.a[j] * (y * sp) @ X / n
        assert np.allclose(got, want, rtol=1e-10, atol=1e-18)

    def test_grad_a_constant_activation_single_sample(self):
        # single sample, sigma ~ const c (zero feature => quadratic gives
        # sigma(b)=c), square loss at a=0: entry j = -y * c
        d, m = 3, 2
        W = np.zeros((m, d))
        b = np.array([2.0, 2.0])
        params = NetworkParams(a=np.zeros(m), b=b, W=W)
        act = ACTIVATIONS["quadratic"]
        loss = LossFunction("square")
        x = np.zeros((1, d))
        y = np.array([1.7])
        got = grad_a(params, act, loss, x, y)
        assert np.allclose(got, [-1.7 * 4.0, -1.7 * 4.0], atol=1e-15)

    def test_empty_batch_rejected(self, rng):
        params = init_kaiming(2, 3, seed=0)
        with pytest.raises(ValueError):
            grad_W(params, ACTIVATIONS["quadratic"], LossFunction("square"),
                   np.zeros((0, 3)), np.zeros(0))
