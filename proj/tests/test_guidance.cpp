#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/guidance.hpp"
#include "oracles.hpp"

using namespace simdps;

namespace {

GmmPrior make_coupled_gmm(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GmmComponent> comps(3);
    for (auto& c : comps) {
        c.weight = 1.0 / 3.0;
        c.var = 0.3 + 0.2 * rng.uniform();
        c.mean.resize(n);
        for (auto& v : c.mean)
            v = rng.gaussian();
    }
    return GmmPrior(std::move(comps));
}

// Denoiser whose estimate is the input itself; makes residuals exactly
// controllable.
class EchoDenoiser final : public Denoiser {
public:
    void denoise(std::span<const double> x, double, std::span<double> out) const override {
        std::copy(x.begin(), x.end(), out.begin());
    }
    bool has_vjp() const override { return true; }
    void vjp(std::span<const double>, double, std::span<const double> v,
             std::span<double> out) const override {
        std::copy(v.begin(), v.end(), out.begin());
    }
};

Observation small_obs(std::size_t n, std::size_t gs, std::size_t ge, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& v : xs)
        v = 0.5 * rng.gaussian();
    Rng mask_rng(0);
    return apply_mask(AudioSignal{xs, 1000.0}, mask_from_interval(n, gs, ge), 0.0, mask_rng);
}

} // namespace

TEST_CASE("adaptive variance formula") {
    CHECK(adaptive_variance(2.0, 1.0, 0.3, 16) == doctest::Approx(2.0 / 1.2).epsilon(1e-12));
    // doubling omega halves the variance
    CHECK(adaptive_variance(2.0, 1.0, 0.6, 16) ==
          doctest::Approx(0.5 * adaptive_variance(2.0, 1.0, 0.3, 16)).epsilon(1e-12));
    CHECK(adaptive_variance(0.0, 1.0, 0.3, 16) == 0.0);
    CHECK_THROWS_AS(adaptive_variance(1.0, 1.0, 0.0, 16), Error);
}

TEST_CASE("zero residual produces a zero gradient") {
    const std::size_t n = 8;
    const Observation obs = small_obs(n, 3, 5, 21);
    const EchoDenoiser echo;
    GuidanceState state{obs, std::nullopt, &echo};
    GuidanceConfig cfg;
    cfg.omega_y = 0.3;
    cfg.omega_aux = 0.0;

    // x_tau equal to y on the observed dims -> exactly zero residual
    const std::vector<double> grad = dps_likelihood_score(obs.signal.samples, 0.5, state, cfg);
    for (double g : grad)
        CHECK(g == 0.0);
}

TEST_CASE("likelihood gradients match finite differences (Gaussian denoiser, fixed variances)") {
    const std::size_t n = 10;
    Rng rng(5);
    std::vector<double> mean(n), var(n);
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] = 0.3 * rng.gaussian();
        var[i] = 0.4 + rng.uniform();
    }
    const GaussianPrior prior(mean, var);
    const Observation obs = small_obs(n, 4, 7, 31);
    std::vector<double> guide_s(n);
    for (auto& v : guide_s)
        v = 0.5 * rng.gaussian();

    GuidanceState state{obs, AudioSignal{guide_s, 1000.0}, &prior};
    GuidanceConfig cfg;
    cfg.omega_y = 0.3;
    cfg.omega_aux = 0.15;
    cfg.fixed_sigma2_y = [](double) { return 0.5; };
    cfg.fixed_sigma2_aux = [](double) { return 0.8; };

    const GapMask& mask = obs.mask;
    for (int rep = 0; rep < 20; ++rep) {
        const double sigma = 0.05 + 2.0 * rng.uniform();
        std::vector<double> x(n);
        for (auto& v : x)
            v = rng.gaussian();

        auto objective = [&](const std::vector<double>& xx) {
            const std::vector<double> x0 = prior.denoise_vec(xx, sigma);
            double obs_term = 0.0, aux_term = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!mask.in_gap(i)) {
                    const double r = obs.signal.samples[i] - x0[i];
                    obs_term += r * r;
                } else {
                    const double r = guide_s[i] - x0[i];
                    aux_term += r * r;
                }
            }
            return -obs_term / 0.5 - aux_term / 0.8;
        };
        const std::vector<double> fd = oracles::fd_gradient(objective, x, 1e-5);
        const std::vector<double> got = simdps_likelihood_score(x, sigma, state, cfg);
        CHECK(oracles::max_rel_err(got, fd) < 1e-4);
    }
}

TEST_CASE("likelihood gradient couples into the gap through the denoiser") {
    const std::size_t n = 12;
    const GmmPrior gmm = make_coupled_gmm(n, 17);
    const Observation obs = small_obs(n, 4, 8, 41);
    GuidanceState state{obs, std::nullopt, &gmm};
    GuidanceConfig cfg;
    cfg.omega_y = 0.3;
    cfg.omega_aux = 0.0;

    Rng rng(3);
    std::vector<double> x(n);
    for (auto& v : x)
        v = rng.gaussian();
    const std::vector<double> g = dps_likelihood_score(x, 0.6, state, cfg);
    double gap_mag = 0.0;
    for (std::size_t i = obs.mask.gap_start; i <= obs.mask.gap_end; ++i)
        gap_mag += std::abs(g[i]);
    CHECK(gap_mag > 0.0);
}

TEST_CASE("identity-Jacobian auxiliary term is supported on the gap only") {
    const std::size_t n = 12;
    const GmmPrior gmm = make_coupled_gmm(n, 17);
    const Observation obs = small_obs(n, 4, 8, 41);
    Rng rng(9);
    std::vector<double> guide_s(n);
    for (auto& v : guide_s)
        v = rng.gaussian();
    GuidanceState state{obs, AudioSignal{guide_s, 1000.0}, &gmm};
    GuidanceConfig cfg;
    cfg.omega_y = 0.0; // isolate the auxiliary term
    cfg.omega_aux = 0.15;
    cfg.grad_mode = GradMode::identity_jacobian;

    std::vector<double> x(n);
    for (auto& v : x)
        v = rng.gaussian();
    const std::vector<double> g = simdps_likelihood_score(x, 0.7, state, cfg);
    for (std::size_t i = 0; i < n; ++i) {
        if (!obs.mask.in_gap(i))
            CHECK(g[i] == 0.0);
    }
}

TEST_CASE("recovering plain posterior sampling: omega_aux = 0 is bit-identical") {
    const std::size_t n = 14;
    const GmmPrior gmm = make_coupled_gmm(n, 29);
    const Observation obs = small_obs(n, 5, 9, 51);
    GuidanceState state{obs, std::nullopt, &gmm};
    GuidanceConfig cfg;
    cfg.omega_y = 0.3;
    cfg.omega_aux = 0.0;

    Rng rng(100);
    for (int rep = 0; rep < 100; ++rep) {
        const double sigma = std::exp(rng.uniform() * (std::log(8.0) + 5.0) - 5.0);
        std::vector<double> x(n);
        for (auto& v : x)
            v = rng.gaussian();
        const std::vector<double> a = simdps_likelihood_score(x, sigma, state, cfg);
        const std::vector<double> b = dps_likelihood_score(x, sigma, state, cfg);
        CHECK(a == b);
    }
}

TEST_CASE("posterior_score is an elementwise sum") {
    CHECK(posterior_score(std::vector<double>{1, 2}, std::vector<double>{0.5, -2}) ==
          std::vector<double>{1.5, 0.0});
    CHECK(posterior_score(std::vector<double>{1, 2}, std::vector<double>{0, 0}) ==
          std::vector<double>{1, 2});
    CHECK_THROWS_AS(posterior_score(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("linear-Gaussian exactness: assembled posterior score equals the closed form") {
    // Isotropic prior, fixed test-mode variances 2 * (V(sigma) + sigma_y^2)
    // make the likelihood approximation exact, so prior + likelihood must
    // reproduce the diffused posterior score.
    const std::size_t n = 16;
    const double v0 = 0.8;
    const double sigma_y = 0.05;
    Rng rng(61);
    std::vector<double> mean(n);
    for (auto& v : mean)
        v = 0.4 * rng.gaussian();
    const GaussianPrior prior(mean, std::vector<double>(n, v0));
    const Observation obs = small_obs(n, 4, 11, 71);

    GuidanceState state{obs, std::nullopt, &prior};
    GuidanceConfig cfg;
    cfg.omega_y = 0.3; // unused in fixed mode
    cfg.omega_aux = 0.0;
    cfg.fixed_sigma2_y = [&](double sigma) {
        const double vpost = v0 * sigma * sigma / (v0 + sigma * sigma);
        return 2.0 * (vpost + sigma_y * sigma_y);
    };

    const GaussianPosterior post = analytic_inpainting_posterior(prior, obs, sigma_y);
    for (double sigma : {8.0, 2.0, 0.5, 0.05, std::exp(-5.0)}) {
        std::vector<double> x(n);
        for (auto& v : x)
            v = 2.0 * rng.gaussian();
        const std::vector<double> prior_sc = prior.score_vec(x, sigma);
        const std::vector<double> lik = simdps_likelihood_score(x, sigma, state, cfg);
        const std::vector<double> got = posterior_score(prior_sc, lik);
        std::vector<double> want(n);
        for (std::size_t i = 0; i < n; ++i)
            want[i] = (post.mean[i] - x[i]) / (post.var[i] + sigma * sigma);
        CHECK(oracles::max_rel_err(got, want) < 1e-6);
    }
}

TEST_CASE("guidance state validation") {
    const std::size_t n = 8;
    const GmmPrior gmm = make_coupled_gmm(n, 5);
    const Observation obs = small_obs(n, 2, 5, 5);
    GuidanceConfig cfg;
    cfg.omega_aux = 0.15; // guide required but absent
    GuidanceState state{obs, std::nullopt, &gmm};
    CHECK_THROWS_AS(validate_guidance(state, cfg), Error);

    cfg.omega_aux = 0.0;
    state.guide = obs.signal; // guide present but omega_aux = 0
    CHECK_THROWS_AS(validate_guidance(state, cfg), Error);
}

TEST_CASE("exact-gradient mode demands a Jacobian product") {
    class NoVjp final : public Denoiser {
    public:
        void denoise(std::span<const double> x, double, std::span<double> out) const override {
            std::copy(x.begin(), x.end(), out.begin());
        }
    };
    const std::size_t n = 6;
    const NoVjp d;
    const Observation obs = small_obs(n, 2, 3, 5);
    GuidanceState state{obs, std::nullopt, &d};
    GuidanceConfig cfg;
    cfg.omega_y = 0.3;
    cfg.grad_mode = GradMode::exact_vjp;
    std::vector<double> x(n, 0.7);
    try {
        simdps_likelihood_score(x, 1.0, state, cfg);
        FAIL("expected capability error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::capability);
    }
}
