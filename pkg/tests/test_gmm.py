"""Mixture prior: EM recovery, Bayes responsibilities and divergence terms."""

import numpy as np
import pytest

import vcoclust.tensor as T
from vcoclust import gmm
from vcoclust.synth import gaussian_blobs
from vcoclust.tensor import Tensor, constant, parameter


def gaussian_logpdf(x, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def kl_node_oracle(mean, logvar, gamma, p_means, p_logvars):
    """Scalar triple loop over nodes, components, dimensions."""
    n, j = mean.shape
    k = p_means.shape[0]
    total = 0.0
    for i in range(n):
        for c in range(k):
            inner = 0.0
            for d in range(j):
                var = np.exp(logvar[i, d])
                pvar = np.exp(p_logvars[c, d])
                inner += (
                    var / pvar
                    + (mean[i, d] - p_means[c, d]) ** 2 / pvar
                    - (logvar[i, d] - p_logvars[c, d])
                    - 1.0
                )
            total += gamma[i, c] * inner
    return total / (2.0 * n * k * j)


def kl_attr_oracle(mean, logvar, prior_var=1.0):
    m, j = mean.shape
    total = 0.0
    for i in range(m):
        for d in range(j):
            var = np.exp(logvar[i, d])
            total += var / prior_var + mean[i, d] ** 2 / prior_var \
                - np.log(var / prior_var) - 1.0
    return total / (2.0 * m * j)


def kl_cat_oracle(gamma, pi):
    n, k = gamma.shape
    total = 0.0
    for i in range(n):
        for c in range(k):
            total += gamma[i, c] * np.log(gamma[i, c] / pi[c])
    return total / (n * k)


class TestEmFit:
    def test_recovers_separated_blobs(self):
        centers = np.array([[-3.0, 0.0], [3.0, 0.0]])
        points, _ = gaussian_blobs(400, centers, spread=0.4, seed=5)
        prior = gmm.em_fit(points, 2, seed_or_rng=0)
        got = prior.means.data[np.argsort(prior.means.data[:, 0])]
        assert np.max(np.abs(got - centers)) < 0.1

    def test_n_equals_k_points(self):
        points = np.array([[0.0, 0.0], [5.0, 5.0], [-5.0, 5.0]])
        prior = gmm.em_fit(points, 3, seed_or_rng=1)
        got = sorted(map(tuple, np.round(prior.means.data, 6)))
        assert got == sorted(map(tuple, points))
        assert np.max(np.exp(prior.log_vars.data)) == pytest.approx(gmm.VAR_FLOOR)

    def test_single_component_closed_form(self, rng):
        points = rng.standard_normal((50, 3)) * 2.0 + 1.0
        prior = gmm.em_fit(points, 1, seed_or_rng=2)
        assert np.max(np.abs(prior.means.data[0] - points.mean(axis=0))) < 1e-9
        assert np.max(np.abs(np.exp(prior.log_vars.data[0]) - points.var(axis=0))) < 1e-9
        assert prior.weights()[0] == pytest.approx(1.0)

    def test_log_likelihood_monotone(self, rng):
        for trial in range(8):
            points = rng.standard_normal((40, 2)) + rng.integers(-2, 3, size=(40, 2))
            prior = gmm.em_fit(points, 3, seed_or_rng=trial)
            hist = np.array(prior.fit_history)
            assert np.all(np.diff(hist) >= -1e-9)

    def test_rejects_bad_counts(self, rng):
        from vcoclust.errors import ContractError

        points = rng.standard_normal((5, 2))
        with pytest.raises(ContractError):
            gmm.em_fit(points, 0, seed_or_rng=0)
        with pytest.raises(ContractError):
            gmm.em_fit(points, 6, seed_or_rng=0)

    def test_weights_reflect_blob_sizes(self):
        centers = np.array([[-4.0], [4.0]])
        gen = np.random.default_rng(3)
        points = np.concatenate([
            centers[0] + 0.3 * gen.standard_normal((300, 1)),
            centers[1] + 0.3 * gen.standard_normal((100, 1)),
        ])
        prior = gmm.em_fit(points, 2, seed_or_rng=4)
        w = np.sort(prior.weights())
        assert abs(w[0] - 0.25) < 0.05 and abs(w[1] - 0.75) < 0.05


class TestResponsibilities:
    def test_single_component_is_certain(self, rng):
        prior = gmm.trainable_prior(np.zeros((1, 2)), np.ones((1, 2)), [1.0])
        gamma = gmm.responsibilities(rng.standard_normal((6, 2)), prior)
        assert np.allclose(gamma, 1.0)

    def test_identical_components_split_evenly(self, rng):
        prior = gmm.trainable_prior(np.zeros((2, 2)), np.ones((2, 2)), [0.5, 0.5])
        gamma = gmm.responsibilities(rng.standard_normal((5, 2)), prior)
        assert np.max(np.abs(gamma - 0.5)) < 1e-12

    def test_matches_density_formula(self):
        # K=2, J=1 hand-built instance against the direct Bayes quotient
        means = np.array([[-1.0], [2.0]])
        variances = np.array([[0.5], [2.0]])
        weights = np.array([0.3, 0.7])
        prior = gmm.trainable_prior(means, variances, weights)
        xs = np.array([[-1.5], [0.0], [1.0], [3.0]])
        gamma = gmm.responsibilities(xs, prior)
        for i, x in enumerate(xs[:, 0]):
            dens = weights * np.exp(
                [gaussian_logpdf(x, means[c, 0], variances[c, 0]) for c in range(2)]
            )
            expect = dens / dens.sum()
            assert np.max(np.abs(gamma[i] - expect)) < 1e-12

    def test_rows_sum_to_one(self, rng):
        prior = gmm.trainable_prior(
            rng.standard_normal((4, 3)), np.exp(rng.standard_normal((4, 3))),
            np.full(4, 0.25),
        )
        gamma = gmm.responsibilities(rng.standard_normal((30, 3)) * 3, prior)
        assert np.max(np.abs(gamma.sum(axis=1) - 1.0)) < 1e-9
        assert gamma.min() >= gmm.GAMMA_FLOOR

    def test_shift_invariance_of_log_densities(self, rng):
        # scaling every weight by the same factor shifts all log densities
        # by one constant and must not change the posterior
        means = rng.standard_normal((3, 2))
        variances = np.exp(rng.standard_normal((3, 2)))
        base = gmm.trainable_prior(means, variances, [0.2, 0.3, 0.5])
        shifted = gmm.MixturePrior(
            means=base.means, log_vars=base.log_vars,
            weight_logits=Tensor(base.weight_logits.data + 7.0),
        )
        x = rng.standard_normal((10, 2))
        assert np.max(np.abs(
            gmm.responsibilities(x, base) - gmm.responsibilities(x, shifted)
        )) < 1e-12


class TestKlAttrPrior:
    def test_identical_distributions_zero(self):
        out = gmm.kl_attr_prior(Tensor(np.zeros((3, 2))), Tensor(np.zeros((3, 2))))
        assert abs(out.item()) < 1e-12

    def test_unit_shift_half(self):
        out = gmm.kl_attr_prior(Tensor([[1.0]]), Tensor([[0.0]]))
        assert out.item() == pytest.approx(0.5, abs=1e-12)

    def test_matches_scalar_loop(self, rng):
        mean = rng.standard_normal((4, 3))
        logvar = rng.standard_normal((4, 3)) * 0.5
        out = gmm.kl_attr_prior(Tensor(mean), Tensor(logvar))
        assert out.item() == pytest.approx(kl_attr_oracle(mean, logvar), abs=1e-12)

    def test_monte_carlo_oracle(self):
        gen = np.random.default_rng(8)
        mean = gen.standard_normal((2, 2))
        logvar = 0.5 * gen.standard_normal((2, 2))
        out = gmm.kl_attr_prior(Tensor(mean), Tensor(logvar)).item()
        draws = 200_000
        sigma = np.exp(0.5 * logvar)
        z = mean[None] + sigma[None] * gen.standard_normal((draws, 2, 2))
        per = gaussian_logpdf(z, mean[None], np.exp(logvar)[None]) \
            - gaussian_logpdf(z, 0.0, 1.0)
        vals = per.sum(axis=(1, 2)) / (2 * 2)
        se = vals.std(ddof=1) / np.sqrt(draws)
        assert abs(vals.mean() - out) < 3.0 * se + 1e-12

    def test_non_negative(self, rng):
        for _ in range(20):
            mean = rng.standard_normal((3, 2))
            logvar = rng.standard_normal((3, 2))
            assert gmm.kl_attr_prior(Tensor(mean), Tensor(logvar)).item() >= -1e-9


class TestKlNodeMixture:
    def test_posterior_equals_single_prior(self):
        prior = gmm.trainable_prior(np.zeros((1, 2)), np.ones((1, 2)), [1.0])
        out = gmm.kl_node_mixture(
            Tensor(np.zeros((4, 2))), Tensor(np.zeros((4, 2))),
            np.ones((4, 1)), prior,
        )
        assert abs(out.item()) < 1e-12

    def test_one_hot_matched_components_zero(self):
        means = np.array([[1.0, 1.0], [-1.0, 2.0]])
        prior = gmm.trainable_prior(means, np.ones((2, 2)), [0.5, 0.5])
        posterior_mean = means[[0, 0, 1, 1]]
        gamma = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        out = gmm.kl_node_mixture(
            Tensor(posterior_mean), Tensor(np.zeros((4, 2))), gamma, prior
        )
        assert abs(out.item()) < 1e-12

    def test_matches_scalar_loop(self, rng):
        mean = rng.standard_normal((3, 2))
        logvar = 0.3 * rng.standard_normal((3, 2))
        p_means = rng.standard_normal((2, 2))
        p_logvars = 0.3 * rng.standard_normal((2, 2))
        gamma = rng.dirichlet(np.ones(2), size=3)
        prior = gmm.trainable_prior(p_means, np.exp(p_logvars), [0.4, 0.6])
        out = gmm.kl_node_mixture(Tensor(mean), Tensor(logvar), gamma, prior)
        expect = kl_node_oracle(mean, logvar, gamma, p_means, p_logvars)
        assert out.item() == pytest.approx(expect, abs=1e-12)

    def test_monte_carlo_oracle_single_component(self):
        gen = np.random.default_rng(9)
        mean = gen.standard_normal((3, 2))
        logvar = 0.4 * gen.standard_normal((3, 2))
        p_mean = gen.standard_normal((1, 2))
        p_var = np.exp(0.4 * gen.standard_normal((1, 2)))
        prior = gmm.trainable_prior(p_mean, p_var, [1.0])
        out = gmm.kl_node_mixture(
            Tensor(mean), Tensor(logvar), np.ones((3, 1)), prior
        ).item()
        draws = 200_000
        sigma = np.exp(0.5 * logvar)
        z = mean[None] + sigma[None] * gen.standard_normal((draws, 3, 2))
        per = gaussian_logpdf(z, mean[None], np.exp(logvar)[None]) \
            - gaussian_logpdf(z, p_mean[None], p_var[None])
        vals = per.sum(axis=(1, 2)) / (2 * 3 * 1)
        se = vals.std(ddof=1) / np.sqrt(draws)
        assert abs(vals.mean() - out) < 3.0 * se + 1e-12

    def test_gradients(self, rng):
        mean = parameter(rng.standard_normal((3, 2)))
        logvar = parameter(0.3 * rng.standard_normal((3, 2)))
        prior = gmm.trainable_prior(
            rng.standard_normal((2, 2)), np.exp(0.3 * rng.standard_normal((2, 2))),
            [0.5, 0.5],
        )
        gamma = rng.dirichlet(np.ones(2), size=3)

        def f():
            return gmm.kl_node_mixture(mean, logvar, gamma, prior)

        err = T.finite_diff_check(f, [mean, logvar, prior.means, prior.log_vars])
        assert err < 1e-4


class TestKlCategorical:
    def test_matching_distributions_zero(self):
        gamma = np.tile([0.2, 0.8], (5, 1))
        logits = Tensor(np.log([[0.2, 0.8]]))
        assert abs(gmm.kl_categorical(gamma, logits).item()) < 1e-12

    def test_one_hot_against_uniform_closed_form(self):
        n, k = 6, 2
        gamma = np.zeros((n, k))
        gamma[:, 0] = 1.0
        gamma = np.maximum(gamma, gmm.GAMMA_FLOOR)
        out = gmm.kl_categorical(gamma, Tensor(np.zeros((1, k))))
        assert out.item() == pytest.approx(np.log(2.0) / k, abs=1e-8)

    def test_matches_scalar_loop(self, rng):
        gamma = rng.dirichlet(np.ones(3), size=4)
        logits = rng.standard_normal(3)
        pi = np.exp(logits) / np.exp(logits).sum()
        out = gmm.kl_categorical(gamma, Tensor(logits.reshape(1, -1)))
        expect = kl_cat_oracle(np.maximum(gamma, gmm.GAMMA_FLOOR), pi)
        assert out.item() == pytest.approx(expect, abs=1e-12)

    def test_gradient_through_logits(self, rng):
        gamma = rng.dirichlet(np.ones(3), size=5)
        logits = parameter(rng.standard_normal((1, 3)))

        def f():
            return gmm.kl_categorical(gamma, logits)

        assert T.finite_diff_check(f, [logits]) < 1e-4

    def test_non_negative(self, rng):
        for _ in range(20):
            gamma = rng.dirichlet(np.ones(4), size=6)
            logits = Tensor(rng.standard_normal((1, 4)))
            assert gmm.kl_categorical(gamma, logits).item() >= -1e-9
