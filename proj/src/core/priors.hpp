#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "signal.hpp"

namespace simdps {

// Behavioural denoiser contract. denoise() returns the posterior-mean
// estimate of the clean signal given a noisy one at noise level sigma;
// score() is the gradient of the log-density of the noised distribution.
// The two are tied by the identity denoise(x, s) = x + s^2 * score(x, s).
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual void denoise(std::span<const double> x, double sigma, std::span<double> out) const = 0;

    // Default: derive the score from denoise via the identity above.
    virtual void score(std::span<const double> x, double sigma, std::span<double> out) const;

    // Vector-Jacobian product v^T * d denoise / d x. Optional capability;
    // guidance in exact-gradient mode requires it.
    virtual bool has_vjp() const { return false; }
    virtual void vjp(std::span<const double> x, double sigma, std::span<const double> v,
                     std::span<double> out) const;

    std::vector<double> denoise_vec(std::span<const double> x, double sigma) const;
    std::vector<double> score_vec(std::span<const double> x, double sigma) const;
    std::vector<double> vjp_vec(std::span<const double> x, double sigma,
                                std::span<const double> v) const;
};

// Diagonal Gaussian prior N(mean, diag(var)); its denoiser is the
// conjugate posterior mean, linear in the input.
class GaussianPrior final : public Denoiser {
public:
    GaussianPrior(std::vector<double> mean, std::vector<double> var);

    void denoise(std::span<const double> x, double sigma, std::span<double> out) const override;
    void score(std::span<const double> x, double sigma, std::span<double> out) const override;
    bool has_vjp() const override { return true; }
    void vjp(std::span<const double> x, double sigma, std::span<const double> v,
             std::span<double> out) const override;

    std::size_t dim() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& var() const { return var_; }

private:
    std::vector<double> mean_;
    std::vector<double> var_;
};

// Isotropic Gaussian mixture prior. Nonlinear posterior mean; exercises
// cross-sample coupling that a diagonal Gaussian cannot.
struct GmmComponent {
    double weight = 0.0;
    std::vector<double> mean;
    double var = 0.0; // isotropic
};

class GmmPrior final : public Denoiser {
public:
    explicit GmmPrior(std::vector<GmmComponent> components);

    void denoise(std::span<const double> x, double sigma, std::span<double> out) const override;
    void score(std::span<const double> x, double sigma, std::span<double> out) const override;
    bool has_vjp() const override { return true; }
    void vjp(std::span<const double> x, double sigma, std::span<const double> v,
             std::span<double> out) const override;

    std::size_t dim() const { return components_.front().mean.size(); }
    const std::vector<GmmComponent>& components() const { return components_; }

    // Posterior responsibilities at (x, sigma), computed in the log domain.
    std::vector<double> responsibilities(std::span<const double> x, double sigma) const;

private:
    std::vector<GmmComponent> components_;
};

// Applies a short-vector denoiser independently to overlapping frames of a
// long signal and averages the overlaps. Lets the analytic priors stand in
// for a trained model on audio-scale inputs.
class FramedDenoiser final : public Denoiser {
public:
    FramedDenoiser(std::shared_ptr<const Denoiser> base, std::size_t frame_len, std::size_t hop);

    void denoise(std::span<const double> x, double sigma, std::span<double> out) const override;
    bool has_vjp() const override;
    void vjp(std::span<const double> x, double sigma, std::span<const double> v,
             std::span<double> out) const override;

private:
    // Frame start offsets covering [0, n), plus a tail frame if needed.
    std::vector<std::size_t> frame_starts(std::size_t n) const;

    std::shared_ptr<const Denoiser> base_;
    std::size_t frame_len_;
    std::size_t hop_;
};

// Exact posterior of a diagonal Gaussian prior under the gap observation
// model: observed dims get the conjugate product update, gap dims keep the
// prior. noise_sigma = 0 collapses observed dims onto y exactly.
struct GaussianPosterior {
    std::vector<double> mean;
    std::vector<double> var;
};

GaussianPosterior analytic_inpainting_posterior(const GaussianPrior& prior, const Observation& obs,
                                                double noise_sigma);

} // namespace simdps
