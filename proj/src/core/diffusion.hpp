#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rng.hpp"

namespace simdps {

// Descending noise levels sigma_max = s_0 > ... > s_{T-1} = sigma_min,
// log-spaced, plus a terminal 0. The sampler's time variable is the noise
// level itself.
struct DiffusionSchedule {
    std::vector<double> sigmas; // T + 1 entries, last one 0
    std::size_t steps() const { return sigmas.size() - 1; }
    double sigma_max() const { return sigmas.front(); }
};

DiffusionSchedule log_schedule(std::size_t steps, double sigma_min, double sigma_max);

struct SamplerConfig {
    double s_churn = 10.0;
    std::uint64_t seed = 0;
};

// score(x, sigma) -> gradient of log density, written into the last arg.
using ScoreFn = std::function<void(std::span<const double>, double, std::span<double>)>;

// i.i.d. N(0, sigma_max^2) draw.
std::vector<double> sample_prior(std::size_t n, double sigma_max, Rng& rng);

// Second-order stochastic sampler for dx/dsigma = -sigma * score(x, sigma):
// per step, noise is optionally injected to raise the level by the churn
// factor, then a Heun (trapezoidal) step runs to the next level. The final
// step to sigma = 0 is plain Euler. Deterministic given cfg.seed.
std::vector<double> heun_stochastic_sample(const ScoreFn& score, const DiffusionSchedule& schedule,
                                           const SamplerConfig& cfg, std::size_t n);

// Same, but continue from a caller-supplied state at schedule.sigma_max().
std::vector<double> heun_stochastic_sample_from(std::vector<double> x, const ScoreFn& score,
                                                const DiffusionSchedule& schedule,
                                                const SamplerConfig& cfg, Rng& rng);

} // namespace simdps
