#include "priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace simdps {

namespace {

void check_dim(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got)
        raise(errc::shape_mismatch,
              std::string(what) + ": expected " + std::to_string(expected) + " dims, got " +
                  std::to_string(got));
}

} // namespace

void Denoiser::score(std::span<const double> x, double sigma, std::span<double> out) const {
    denoise(x, sigma, out);
    const double inv = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = (out[i] - x[i]) * inv;
}

void Denoiser::vjp(std::span<const double>, double, std::span<const double>,
                   std::span<double>) const {
    raise(errc::capability, "denoiser does not expose a Jacobian product");
}

std::vector<double> Denoiser::denoise_vec(std::span<const double> x, double sigma) const {
    std::vector<double> out(x.size());
    denoise(x, sigma, out);
    return out;
}

std::vector<double> Denoiser::score_vec(std::span<const double> x, double sigma) const {
    std::vector<double> out(x.size());
    score(x, sigma, out);
    return out;
}

std::vector<double> Denoiser::vjp_vec(std::span<const double> x, double sigma,
                                      std::span<const double> v) const {
    std::vector<double> out(x.size());
    vjp(x, sigma, v, out);
    return out;
}

GaussianPrior::GaussianPrior(std::vector<double> mean, std::vector<double> var)
    : mean_(std::move(mean)), var_(std::move(var)) {
    if (mean_.empty() || mean_.size() != var_.size())
        raise(errc::invalid_argument, "Gaussian prior mean and variance lengths must match");
    for (double v : var_)
        if (!(v > 0.0))
            raise(errc::invalid_argument, "Gaussian prior variances must be positive");
}

void GaussianPrior::denoise(std::span<const double> x, double sigma, std::span<double> out) const {
    check_dim(mean_.size(), x.size(), "gaussian denoise");
    const double s2 = sigma * sigma;
    for (std::size_t d = 0; d < x.size(); ++d)
        out[d] = (var_[d] * x[d] + s2 * mean_[d]) / (var_[d] + s2);
}

void GaussianPrior::score(std::span<const double> x, double sigma, std::span<double> out) const {
    check_dim(mean_.size(), x.size(), "gaussian score");
    const double s2 = sigma * sigma;
    for (std::size_t d = 0; d < x.size(); ++d)
        out[d] = (mean_[d] - x[d]) / (var_[d] + s2);
}

void GaussianPrior::vjp(std::span<const double> x, double sigma, std::span<const double> v,
                        std::span<double> out) const {
    check_dim(mean_.size(), x.size(), "gaussian vjp");
    check_dim(mean_.size(), v.size(), "gaussian vjp vector");
    const double s2 = sigma * sigma;
    for (std::size_t d = 0; d < x.size(); ++d)
        out[d] = v[d] * var_[d] / (var_[d] + s2);
}

GmmPrior::GmmPrior(std::vector<GmmComponent> components) : components_(std::move(components)) {
    if (components_.empty())
        raise(errc::invalid_argument, "mixture needs at least one component");
    const std::size_t d = components_.front().mean.size();
    double wsum = 0.0;
    for (const auto& c : components_) {
        if (c.mean.size() != d || c.mean.empty())
            raise(errc::invalid_argument, "mixture component dimensions must agree");
        if (!(c.var > 0.0))
            raise(errc::invalid_argument, "mixture component variances must be positive");
        if (c.weight < 0.0)
            raise(errc::invalid_argument, "mixture weights must be >= 0");
        wsum += c.weight;
    }
    if (!(std::abs(wsum - 1.0) < 1e-9))
        raise(errc::invalid_argument, "mixture weights must sum to 1");
}

std::vector<double> GmmPrior::responsibilities(std::span<const double> x, double sigma) const {
    check_dim(dim(), x.size(), "gmm responsibilities");
    const std::size_t K = components_.size();
    const double s2 = sigma * sigma;
    const std::size_t n = x.size();

    // log w_k + log N(x; mu_k, (v_k + s2) I), stabilized by log-sum-exp.
    std::vector<double> logp(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& c = components_[k];
        const double tv = c.var + s2;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - c.mean[i];
            sq += d * d;
        }
        const double logw =
            c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity();
        logp[k] = logw - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI * tv) - 0.5 * sq / tv;
    }
    const double m = *std::max_element(logp.begin(), logp.end());
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        z += std::exp(logp[k] - m);
    std::vector<double> gamma(K);
    for (std::size_t k = 0; k < K; ++k)
        gamma[k] = std::exp(logp[k] - m) / z;
    return gamma;
}

void GmmPrior::denoise(std::span<const double> x, double sigma, std::span<double> out) const {
    check_dim(dim(), x.size(), "gmm denoise");
    const std::vector<double> gamma = responsibilities(x, sigma);
    const double s2 = sigma * sigma;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double tv = c.var + s2;
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] += gamma[k] * (c.var * x[i] + s2 * c.mean[i]) / tv;
    }
}

void GmmPrior::score(std::span<const double> x, double sigma, std::span<double> out) const {
    check_dim(dim(), x.size(), "gmm score");
    const std::vector<double> gamma = responsibilities(x, sigma);
    const double s2 = sigma * sigma;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double tv = c.var + s2;
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] += gamma[k] * (c.mean[i] - x[i]) / tv;
    }
}

// d denoise / d x = sum_k gamma_k [ m_k (g_k - gbar)^T + v_k/(v_k+s2) I ]
// with g_k = (mu_k - x)/(v_k + s2), so the transpose product is
// sum_k gamma_k (m_k . v) (g_k - gbar) + (sum_k gamma_k v_k/(v_k+s2)) v.
void GmmPrior::vjp(std::span<const double> x, double sigma, std::span<const double> v,
                   std::span<double> out) const {
    check_dim(dim(), x.size(), "gmm vjp");
    check_dim(dim(), v.size(), "gmm vjp vector");
    const std::size_t K = components_.size();
    const std::size_t n = x.size();
    const double s2 = sigma * sigma;
    const std::vector<double> gamma = responsibilities(x, sigma);

    std::vector<double> gbar(n, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& c = components_[k];
        const double tv = c.var + s2;
        for (std::size_t i = 0; i < n; ++i)
            gbar[i] += gamma[k] * (c.mean[i] - x[i]) / tv;
    }

    std::fill(out.begin(), out.end(), 0.0);
    double diag = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& c = components_[k];
        const double tv = c.var + s2;
        diag += gamma[k] * c.var / tv;
        double mv = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            mv += (c.var * x[i] + s2 * c.mean[i]) / tv * v[i];
        for (std::size_t i = 0; i < n; ++i)
            out[i] += gamma[k] * mv * ((c.mean[i] - x[i]) / tv - gbar[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] += diag * v[i];
}

FramedDenoiser::FramedDenoiser(std::shared_ptr<const Denoiser> base, std::size_t frame_len,
                               std::size_t hop)
    : base_(std::move(base)), frame_len_(frame_len), hop_(hop) {
    if (!base_)
        raise(errc::invalid_argument, "framed denoiser needs a base denoiser");
    if (frame_len_ == 0 || hop_ == 0 || hop_ > frame_len_)
        raise(errc::invalid_argument, "framed denoiser requires 0 < hop <= frame_len");
}

std::vector<std::size_t> FramedDenoiser::frame_starts(std::size_t n) const {
    if (n < frame_len_)
        raise(errc::invalid_argument, "signal shorter than one denoiser frame");
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + frame_len_ <= n; s += hop_)
        starts.push_back(s);
    // Tail frame so every sample is covered.
    if (starts.back() + frame_len_ < n)
        starts.push_back(n - frame_len_);
    return starts;
}

void FramedDenoiser::denoise(std::span<const double> x, double sigma, std::span<double> out) const {
    const std::vector<std::size_t> starts = frame_starts(x.size());
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> coverage(x.size(), 0.0);
    std::vector<double> buf(frame_len_);
    for (std::size_t s : starts) {
        base_->denoise(x.subspan(s, frame_len_), sigma, buf);
        for (std::size_t i = 0; i < frame_len_; ++i) {
            out[s + i] += buf[i];
            coverage[s + i] += 1.0;
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] /= coverage[i];
}

bool FramedDenoiser::has_vjp() const { return base_->has_vjp(); }

void FramedDenoiser::vjp(std::span<const double> x, double sigma, std::span<const double> v,
                         std::span<double> out) const {
    const std::vector<std::size_t> starts = frame_starts(x.size());
    std::vector<double> coverage(x.size(), 0.0);
    for (std::size_t s : starts)
        for (std::size_t i = 0; i < frame_len_; ++i)
            coverage[s + i] += 1.0;

    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> vw(frame_len_);
    std::vector<double> buf(frame_len_);
    for (std::size_t s : starts) {
        for (std::size_t i = 0; i < frame_len_; ++i)
            vw[i] = v[s + i] / coverage[s + i];
        base_->vjp(x.subspan(s, frame_len_), sigma, vw, buf);
        for (std::size_t i = 0; i < frame_len_; ++i)
            out[s + i] += buf[i];
    }
}

GaussianPosterior analytic_inpainting_posterior(const GaussianPrior& prior, const Observation& obs,
                                                double noise_sigma) {
    const std::size_t n = obs.mask.frame_len;
    check_dim(prior.dim(), n, "analytic posterior");
    if (noise_sigma < 0.0)
        raise(errc::invalid_argument, "noise sigma must be >= 0");

    GaussianPosterior post;
    post.mean.resize(n);
    post.var.resize(n);
    const double ns2 = noise_sigma * noise_sigma;
    for (std::size_t d = 0; d < n; ++d) {
        if (obs.mask.in_gap(d)) {
            post.mean[d] = prior.mean()[d];
            post.var[d] = prior.var()[d];
        } else if (noise_sigma == 0.0) {
            post.mean[d] = obs.signal.samples[d];
            post.var[d] = 0.0;
        } else {
            const double prec = 1.0 / prior.var()[d] + 1.0 / ns2;
            post.var[d] = 1.0 / prec;
            post.mean[d] =
                post.var[d] * (prior.mean()[d] / prior.var()[d] + obs.signal.samples[d] / ns2);
        }
    }
    return post;
}

} // namespace simdps
