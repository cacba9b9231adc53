#include "diffusion.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace simdps {

DiffusionSchedule log_schedule(std::size_t steps, double sigma_min, double sigma_max) {
    if (steps < 2)
        raise(errc::invalid_argument, "schedule needs at least 2 steps");
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max))
        raise(errc::invalid_argument, "schedule requires 0 < sigma_min < sigma_max");

    DiffusionSchedule sched;
    sched.sigmas.resize(steps + 1);
    const double lmax = std::log(sigma_max);
    const double lmin = std::log(sigma_min);
    sched.sigmas[0] = sigma_max; // endpoints exact, not round-tripped through exp(log)
    sched.sigmas[steps - 1] = sigma_min;
    for (std::size_t i = 1; i + 1 < steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
        sched.sigmas[i] = std::exp(lmax + t * (lmin - lmax));
    }
    sched.sigmas[steps] = 0.0;
    return sched;
}

std::vector<double> sample_prior(std::size_t n, double sigma_max, Rng& rng) {
    if (n == 0)
        raise(errc::invalid_argument, "prior draw needs n >= 1");
    if (sigma_max < 0.0)
        raise(errc::invalid_argument, "sigma_max must be >= 0");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = sigma_max > 0.0 ? sigma_max * rng.gaussian() : 0.0;
    return x;
}

namespace {

void check_finite(const std::vector<double>& x, std::size_t step) {
    for (double v : x)
        if (!std::isfinite(v))
            raise(errc::numeric,
                  "sampler diverged (non-finite state) at step " + std::to_string(step));
}

} // namespace

std::vector<double> heun_stochastic_sample_from(std::vector<double> x, const ScoreFn& score,
                                                const DiffusionSchedule& schedule,
                                                const SamplerConfig& cfg, Rng& rng) {
    if (cfg.s_churn < 0.0)
        raise(errc::invalid_argument, "churn must be >= 0");
    const std::size_t n = x.size();
    const std::size_t T = schedule.steps();

    // Churn below sqrt(2)-1 keeps the raised level under the previous one.
    const double gamma =
        std::min(cfg.s_churn / static_cast<double>(T), std::sqrt(2.0) - 1.0);

    std::vector<double> s1(n), s2(n), x_mid(n);
    for (std::size_t i = 0; i < T; ++i) {
        const double sigma = schedule.sigmas[i];
        const double sigma_next = schedule.sigmas[i + 1];

        double sigma_hat = sigma;
        if (cfg.s_churn > 0.0 && gamma > 0.0) {
            sigma_hat = sigma * (1.0 + gamma);
            const double add = std::sqrt(sigma_hat * sigma_hat - sigma * sigma);
            for (std::size_t d = 0; d < n; ++d)
                x[d] += add * rng.gaussian();
        }

        score(x, sigma_hat, s1);
        const double h = sigma_next - sigma_hat;
        if (sigma_next > 0.0) {
            for (std::size_t d = 0; d < n; ++d)
                x_mid[d] = x[d] + h * (-sigma_hat * s1[d]);
            score(x_mid, sigma_next, s2);
            for (std::size_t d = 0; d < n; ++d)
                x[d] += h * 0.5 * (-sigma_hat * s1[d] - sigma_next * s2[d]);
        } else {
            // Heun needs a score at sigma = 0, which is undefined; Euler out.
            for (std::size_t d = 0; d < n; ++d)
                x[d] += h * (-sigma_hat * s1[d]);
        }
        check_finite(x, i);
    }
    return x;
}

std::vector<double> heun_stochastic_sample(const ScoreFn& score, const DiffusionSchedule& schedule,
                                           const SamplerConfig& cfg, std::size_t n) {
    Rng rng(cfg.seed);
    std::vector<double> x = sample_prior(n, schedule.sigma_max(), rng);
    return heun_stochastic_sample_from(std::move(x), score, schedule, cfg, rng);
}

} // namespace simdps
