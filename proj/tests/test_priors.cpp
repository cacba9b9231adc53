#include <doctest.h>

#include <cmath>
#include <memory>

#include "core/errors.hpp"
#include "core/priors.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

using namespace simdps;

namespace {

GmmPrior make_test_gmm(std::size_t n, std::uint64_t seed, std::size_t k = 3) {
    Rng rng(seed);
    std::vector<GmmComponent> comps(k);
    for (std::size_t c = 0; c < k; ++c) {
        comps[c].weight = 1.0 / static_cast<double>(k);
        comps[c].var = 0.2 + 0.3 * rng.uniform();
        comps[c].mean.resize(n);
        for (auto& v : comps[c].mean)
            v = rng.gaussian();
    }
    return GmmPrior(std::move(comps));
}

} // namespace

TEST_CASE("gaussian denoise: conjugate posterior mean") {
    const GaussianPrior prior({0.0}, {1.0});
    std::vector<double> out(1);
    prior.denoise(std::vector<double>{2.0}, 1.0, out);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gaussian denoise limits: zero noise is identity, large noise is the prior mean") {
    const GaussianPrior prior({0.7, -0.2}, {0.5, 2.0});
    std::vector<double> x{1.5, -3.0}, out(2);
    prior.denoise(x, 0.0, out);
    CHECK(out[0] == x[0]);
    CHECK(out[1] == x[1]);
    prior.denoise(x, 1e9, out);
    CHECK(out[0] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(out[1] == doctest::Approx(-0.2).epsilon(1e-6));
}

TEST_CASE("gaussian Jacobian entries lie in (0, 1) for positive noise") {
    const GaussianPrior prior({0.0, 0.0, 0.0}, {0.3, 1.0, 5.0});
    std::vector<double> v{1.0, 1.0, 1.0}, out(3);
    for (double sigma : {1e-3, 0.5, 8.0}) {
        prior.vjp(std::vector<double>{0.1, 0.2, 0.3}, sigma, v, out);
        for (double j : out) {
            CHECK(j > 0.0);
            CHECK(j < 1.0);
        }
    }
}

TEST_CASE("Tweedie identity holds for Gaussian and GMM denoisers") {
    const std::size_t n = 12;
    Rng prior_rng(42);
    std::vector<double> mean(n), var(n);
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] = prior_rng.gaussian();
        var[i] = 0.2 + prior_rng.uniform();
    }
    const GaussianPrior gaussian(mean, var);
    const GmmPrior gmm = make_test_gmm(n, 7);

    Rng rng(1234);
    for (const Denoiser* d : {static_cast<const Denoiser*>(&gaussian),
                              static_cast<const Denoiser*>(&gmm)}) {
        for (int rep = 0; rep < 100; ++rep) {
            const double sigma = std::exp(rng.uniform() * (std::log(8.0) + 5.0) - 5.0);
            std::vector<double> x(n);
            for (auto& v : x)
                v = 3.0 * rng.gaussian();
            const std::vector<double> x0 = d->denoise_vec(x, sigma);
            const std::vector<double> sc = d->score_vec(x, sigma);
            for (std::size_t i = 0; i < n; ++i) {
                const double reconstructed = x[i] + sigma * sigma * sc[i];
                CHECK(oracles::rel_err(reconstructed, x0[i]) < 1e-9);
            }
        }
    }
}

TEST_CASE("gmm denoise: symmetric mixture at the midpoint returns the midpoint") {
    std::vector<GmmComponent> comps(2);
    comps[0] = {0.5, {1.0, 1.0}, 0.25};
    comps[1] = {0.5, {-1.0, -1.0}, 0.25};
    const GmmPrior gmm(std::move(comps));
    std::vector<double> out(2);
    gmm.denoise(std::vector<double>{0.0, 0.0}, 1.0, out);
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("single-component mixture reduces to the Gaussian denoiser exactly") {
    const std::size_t n = 6;
    Rng rng(3);
    std::vector<double> mean(n);
    for (auto& v : mean)
        v = rng.gaussian();
    const double var = 0.7;
    const GmmPrior gmm({GmmComponent{1.0, mean, var}});
    const GaussianPrior gauss(mean, std::vector<double>(n, var));

    std::vector<double> x(n);
    for (auto& v : x)
        v = rng.gaussian();
    for (double sigma : {0.01, 1.0, 8.0}) {
        const auto a = gmm.denoise_vec(x, sigma);
        const auto b = gauss.denoise_vec(x, sigma);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}

TEST_CASE("gmm vjp agrees with central finite differences") {
    const std::size_t n = 8;
    const GmmPrior gmm = make_test_gmm(n, 11);
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
        const double sigma = 0.05 + 2.0 * rng.uniform();
        std::vector<double> x(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.gaussian();
            v[i] = rng.gaussian();
        }
        // d/dx_i of <v, denoise(x)> equals vjp(v)_i
        auto f = [&](const std::vector<double>& xx) {
            const std::vector<double> d = gmm.denoise_vec(xx, sigma);
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += v[i] * d[i];
            return s;
        };
        const std::vector<double> fd = oracles::fd_gradient(f, x, 1e-5);
        const std::vector<double> jt = gmm.vjp_vec(x, sigma, v);
        CHECK(oracles::max_rel_err(jt, fd) < 1e-5);
    }
}

TEST_CASE("gmm is invariant under component reordering and joint translation") {
    const std::size_t n = 5;
    Rng rng(19);
    std::vector<GmmComponent> comps(3);
    for (auto& c : comps) {
        c.weight = 1.0 / 3.0;
        c.var = 0.3 + 0.2 * rng.uniform();
        c.mean.resize(n);
        for (auto& v : c.mean)
            v = rng.gaussian();
    }
    std::vector<double> x(n);
    for (auto& v : x)
        v = rng.gaussian();

    const GmmPrior a(comps);
    std::vector<GmmComponent> shuffled = {comps[2], comps[0], comps[1]};
    const GmmPrior b(std::move(shuffled));
    const auto da = a.denoise_vec(x, 0.8);
    const auto db = b.denoise_vec(x, 0.8);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(da[i] == doctest::Approx(db[i]).epsilon(1e-13));

    const double shift = 2.75;
    std::vector<GmmComponent> moved = comps;
    for (auto& c : moved)
        for (auto& v : c.mean)
            v += shift;
    std::vector<double> xs = x;
    for (auto& v : xs)
        v += shift;
    const GmmPrior c(std::move(moved));
    const auto dc = c.denoise_vec(xs, 0.8);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(dc[i] == doctest::Approx(da[i] + shift).epsilon(1e-12));
}

TEST_CASE("gmm stays finite at extreme noise levels and distant states") {
    const GmmPrior gmm = make_test_gmm(6, 23);
    std::vector<double> x(6, 50.0); // far from every component
    for (double sigma : {std::exp(-5.0), 8.0}) {
        const auto d = gmm.denoise_vec(x, sigma);
        const auto s = gmm.score_vec(x, sigma);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(std::isfinite(d[i]));
            CHECK(std::isfinite(s[i]));
        }
    }
}

TEST_CASE("framed denoiser equals the base denoiser on a single frame") {
    const std::size_t n = 16;
    auto base = std::make_shared<GmmPrior>(make_test_gmm(n, 31));
    const FramedDenoiser framed(base, n, n / 2);
    Rng rng(5);
    std::vector<double> x(n);
    for (auto& v : x)
        v = rng.gaussian();
    const auto a = framed.denoise_vec(x, 0.7);
    const auto b = base->denoise_vec(x, 0.7);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
}

TEST_CASE("framed denoiser covers every sample and has a consistent Jacobian product") {
    const std::size_t frame = 16, hop = 8, n = 53; // forces a tail frame
    auto base = std::make_shared<GmmPrior>(make_test_gmm(frame, 37));
    const FramedDenoiser framed(base, frame, hop);
    Rng rng(13);
    std::vector<double> x(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.gaussian();
        v[i] = rng.gaussian();
    }
    const double sigma = 0.5;
    auto f = [&](const std::vector<double>& xx) {
        const std::vector<double> d = framed.denoise_vec(xx, sigma);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += v[i] * d[i];
        return s;
    };
    const std::vector<double> fd = oracles::fd_gradient(f, x, 1e-5);
    const std::vector<double> jt = framed.vjp_vec(x, sigma, v);
    CHECK(oracles::max_rel_err(jt, fd) < 1e-5);
}

TEST_CASE("analytic posterior: exact observation, unobserved dims, conjugate update") {
    Rng rng(1);
    const std::size_t n = 4;
    const GaussianPrior prior(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
    const GapMask mask = mask_from_interval(n, 1, 2);

    // noiseless: observed dims collapse onto y
    const AudioSignal x = make_signal({0.5, 0.1, -0.3, 2.0}, 100.0);
    const Observation obs = apply_mask(x, mask, 0.0, rng);
    const GaussianPosterior post = analytic_inpainting_posterior(prior, obs, 0.0);
    CHECK(post.mean[0] == 0.5);
    CHECK(post.var[0] == 0.0);
    CHECK(post.mean[1] == 0.0); // gap dim keeps the prior
    CHECK(post.var[1] == 1.0);

    // sigma_y = 1, y_d = 2 -> mean 1, var 0.5
    const Observation obs2 =
        observation_from_signal(make_signal({2.0, 0.0, 0.0, 2.0}, 100.0), mask);
    const GaussianPosterior post2 = analytic_inpainting_posterior(prior, obs2, 1.0);
    CHECK(post2.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(post2.var[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("analytic posterior matches a dense Bayesian solve on small instances") {
    Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 7);
        std::vector<double> mean(n), var(n), xs(n);
        for (std::size_t i = 0; i < n; ++i) {
            mean[i] = rng.gaussian();
            var[i] = 0.2 + rng.uniform();
            xs[i] = rng.gaussian();
        }
        const std::size_t a = static_cast<std::size_t>(rng.uniform() * n);
        const std::size_t b = a + static_cast<std::size_t>(rng.uniform() * (n - a));
        const GapMask mask = mask_from_interval(n, a, b);
        const double noise = 0.05 + rng.uniform();
        Rng obs_rng(rep);
        const Observation obs = apply_mask(AudioSignal{xs, 100.0}, mask, 0.0, obs_rng);

        const GaussianPrior prior(mean, var);
        const GaussianPosterior got = analytic_inpainting_posterior(prior, obs, noise);
        const oracles::DensePosterior want =
            oracles::dense_gaussian_posterior(mean, var, obs, noise);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(oracles::rel_err(got.mean[i], want.mean[i]) < 1e-9);
            CHECK(oracles::rel_err(got.var[i], want.var[i]) < 1e-9);
        }
    }
}

TEST_CASE("prior validation") {
    CHECK_THROWS_AS(GaussianPrior({1.0}, {0.0}), Error);
    CHECK_THROWS_AS(GaussianPrior({1.0}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(GmmPrior({}), Error);
    CHECK_THROWS_AS(GmmPrior({GmmComponent{0.5, {1.0}, 1.0}}), Error); // weights must sum to 1
}
