#include "guidance.hpp"

#include <cmath>

#include "errors.hpp"

namespace simdps {

void validate_guidance(const GuidanceState& state, const GuidanceConfig& cfg) {
    if (cfg.omega_y < 0.0 || cfg.omega_aux < 0.0)
        raise(errc::invalid_argument, "guidance weights must be >= 0");
    if (!state.denoiser)
        raise(errc::invalid_argument, "guidance state needs a denoiser");
    if ((cfg.omega_aux > 0.0) != state.guide.has_value())
        raise(errc::invalid_argument, "guide signal must be present exactly when omega_aux > 0");
    if (state.guide && state.guide->size() != state.obs.mask.frame_len)
        raise(errc::shape_mismatch, "guide length must equal the observation frame length");
}

double adaptive_variance(double residual_norm, double sigma_tau, double omega, std::size_t n) {
    if (!(omega > 0.0))
        raise(errc::invalid_argument, "adaptive variance needs omega > 0");
    if (n == 0)
        raise(errc::invalid_argument, "adaptive variance needs n >= 1");
    return sigma_tau * residual_norm / (omega * std::sqrt(static_cast<double>(n)));
}

namespace {

// Accumulates one likelihood term: 2/sigma2 * J^T r, where r is the masked
// residual. Skipped entirely when the residual vanishes.
void add_likelihood_term(std::span<const double> x_tau, double sigma,
                         const std::vector<double>& residual, double residual_norm, double omega,
                         const std::function<double(double)>& fixed_sigma2, GradMode mode,
                         const Denoiser& denoiser, std::vector<double>& acc) {
    if (residual_norm == 0.0)
        return;
    const double sigma2 = fixed_sigma2
                              ? fixed_sigma2(sigma)
                              : adaptive_variance(residual_norm, sigma, omega, x_tau.size());
    if (!(sigma2 > 0.0))
        raise(errc::numeric, "likelihood variance must be positive");
    const double scale = 2.0 / sigma2;

    if (mode == GradMode::exact_vjp) {
        if (!denoiser.has_vjp())
            raise(errc::capability,
                  "exact-gradient guidance requires a denoiser Jacobian product; "
                  "use identity_jacobian mode for black-box denoisers");
        std::vector<double> g = denoiser.vjp_vec(x_tau, sigma, residual);
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += scale * g[i];
    } else {
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += scale * residual[i];
    }
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

} // namespace

std::vector<double> simdps_likelihood_score(std::span<const double> x_tau, double sigma,
                                            const GuidanceState& state,
                                            const GuidanceConfig& cfg) {
    validate_guidance(state, cfg);
    const std::size_t n = state.obs.mask.frame_len;
    if (x_tau.size() != n)
        raise(errc::shape_mismatch, "state length does not match observation frame");

    const std::vector<double> x0 = state.denoiser->denoise_vec(x_tau, sigma);
    std::vector<double> grad(n, 0.0);
    const GapMask& mask = state.obs.mask;

    if (cfg.omega_y > 0.0) {
        std::vector<double> r(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (!mask.in_gap(i))
                r[i] = state.obs.signal.samples[i] - x0[i];
        add_likelihood_term(x_tau, sigma, r, norm2(r), cfg.omega_y, cfg.fixed_sigma2_y,
                            cfg.grad_mode, *state.denoiser, grad);
    }
    if (cfg.omega_aux > 0.0) {
        std::vector<double> r(n, 0.0);
        for (std::size_t i = mask.gap_start; i <= mask.gap_end; ++i)
            r[i] = state.guide->samples[i] - x0[i];
        add_likelihood_term(x_tau, sigma, r, norm2(r), cfg.omega_aux, cfg.fixed_sigma2_aux,
                            cfg.grad_mode, *state.denoiser, grad);
    }
    return grad;
}

std::vector<double> dps_likelihood_score(std::span<const double> x_tau, double sigma,
                                         const GuidanceState& state, const GuidanceConfig& cfg) {
    GuidanceConfig plain = cfg;
    plain.omega_aux = 0.0;
    GuidanceState obs_only{state.obs, std::nullopt, state.denoiser};
    return simdps_likelihood_score(x_tau, sigma, obs_only, plain);
}

std::vector<double> posterior_score(std::span<const double> prior_score,
                                    std::span<const double> likelihood_score) {
    if (prior_score.size() != likelihood_score.size())
        raise(errc::shape_mismatch, "score lengths must match");
    std::vector<double> out(prior_score.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = prior_score[i] + likelihood_score[i];
    return out;
}

ScoreFn make_guided_score(const GuidanceState& state, const GuidanceConfig& cfg) {
    validate_guidance(state, cfg);
    return [&state, &cfg](std::span<const double> x, double sigma, std::span<double> out) {
        state.denoiser->score(x, sigma, out);
        const std::vector<double> lik = simdps_likelihood_score(x, sigma, state, cfg);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += lik[i];
    };
}

} // namespace simdps
