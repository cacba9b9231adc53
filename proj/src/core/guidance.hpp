#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "diffusion.hpp"
#include "priors.hpp"
#include "signal.hpp"

namespace simdps {

enum class GradMode {
    exact_vjp,         // propagate through the denoiser Jacobian
    identity_jacobian, // J^T ~ I fallback for black-box denoisers
};

struct GuidanceConfig {
    double omega_y = 0.3;    // observed-data weight
    double omega_aux = 0.0;  // auxiliary-guide weight; 0 disables the term
    GradMode grad_mode = GradMode::exact_vjp;

    // Test mode: when set, these supply the likelihood variances as a
    // function of the noise level instead of the adaptive rule.
    std::function<double(double)> fixed_sigma2_y;
    std::function<double(double)> fixed_sigma2_aux;
};

struct GuidanceState {
    Observation obs;
    std::optional<AudioSignal> guide; // present iff omega_aux > 0
    const Denoiser* denoiser = nullptr;
};

void validate_guidance(const GuidanceState& state, const GuidanceConfig& cfg);

// Adaptive likelihood variance: sigma^2 = sigma_tau * |r| / (omega * sqrt(n)).
double adaptive_variance(double residual_norm, double sigma_tau, double omega, std::size_t n);

// Gradient of the log-likelihood of the observed samples around the
// denoised estimate, with its variance set adaptively (or fixed in test
// mode). Zero residual contributes a zero gradient.
std::vector<double> dps_likelihood_score(std::span<const double> x_tau, double sigma,
                                         const GuidanceState& state, const GuidanceConfig& cfg);

// Observed term plus the auxiliary-guide term over the gap, each with its
// own variance. With omega_aux = 0 this is dps_likelihood_score exactly.
std::vector<double> simdps_likelihood_score(std::span<const double> x_tau, double sigma,
                                            const GuidanceState& state, const GuidanceConfig& cfg);

// Elementwise sum of prior and likelihood scores.
std::vector<double> posterior_score(std::span<const double> prior_score,
                                    std::span<const double> likelihood_score);

// Bundles prior score and guidance into a sampler-ready score function.
// The state and config are captured by reference; keep them alive.
ScoreFn make_guided_score(const GuidanceState& state, const GuidanceConfig& cfg);

} // namespace simdps
