#include "baselines.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace simdps {

namespace {

bool all_zero(const std::vector<double>& v) {
    for (double x : v)
        if (x != 0.0)
            return false;
    return true;
}

} // namespace

ArModel ar_fit(const AudioSignal& context, std::size_t order) {
    if (order == 0)
        raise(errc::invalid_argument, "AR order must be >= 1");
    const std::vector<double>& x = context.samples;
    const std::size_t n = x.size();
    if (n < 3 * order)
        raise(errc::invalid_argument, "context must be at least 3x the AR order");
    if (all_zero(x))
        return ArModel{std::vector<double>(order, 0.0)};

    // Burg recursion on the prediction-error filter 1 + sum a_hat[j] z^-j.
    std::vector<double> a_hat;
    std::vector<double> f(x), b(x);
    for (std::size_t m = 1; m <= order; ++m) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = m; i < n; ++i) {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        if (den == 0.0) {
            a_hat.resize(order, 0.0);
            break;
        }
        const double k = -2.0 * num / den;
        std::vector<double> a_next(m);
        for (std::size_t j = 1; j < m; ++j)
            a_next[j - 1] = a_hat[j - 1] + k * a_hat[m - 1 - j];
        a_next[m - 1] = k;
        a_hat = std::move(a_next);

        for (std::size_t i = n - 1; i >= m; --i) {
            const double fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
            if (i == m)
                break;
        }
    }

    ArModel model;
    model.coefficients.resize(order);
    for (std::size_t j = 0; j < order; ++j)
        model.coefficients[j] = -a_hat[j]; // prediction form
    return model;
}

std::vector<double> ar_extrapolate(const ArModel& model, const std::vector<double>& history,
                                   std::size_t len) {
    const std::size_t p = model.order();
    if (history.size() < p)
        raise(errc::invalid_argument, "history shorter than the AR order");
    std::vector<double> buf(history.end() - static_cast<long>(p), history.end());
    std::vector<double> out(len);
    for (std::size_t t = 0; t < len; ++t) {
        double v = 0.0;
        for (std::size_t j = 0; j < p; ++j)
            v += model.coefficients[j] * buf[p - 1 - j];
        out[t] = v;
        buf.erase(buf.begin());
        buf.push_back(v);
    }
    return out;
}

namespace {

// Fit one context side, shrinking the order if the side is short.
// Returns false when no usable model exists (empty or too short).
bool fit_side(const std::vector<double>& side, double rate, std::size_t order, ArModel& model) {
    if (side.empty())
        return false;
    std::size_t p = std::min(order, side.size() / 3);
    if (p == 0)
        return false;
    model = ar_fit(AudioSignal{side, rate}, p);
    return true;
}

} // namespace

AudioSignal ar_inpaint(const Observation& obs, std::size_t order, double fade_ms) {
    const GapMask& mask = obs.mask;
    const std::vector<double>& y = obs.signal.samples;
    const std::size_t gap_len = mask.gap_samples();

    const std::vector<double> left(y.begin(), y.begin() + static_cast<long>(mask.gap_start));
    const std::vector<double> right(y.begin() + static_cast<long>(mask.gap_end + 1), y.end());

    ArModel fwd_model, bwd_model;
    const bool have_fwd = fit_side(left, obs.signal.sample_rate, order, fwd_model) &&
                          left.size() >= fwd_model.order();
    const bool have_bwd = fit_side(right, obs.signal.sample_rate, order, bwd_model) &&
                          right.size() >= bwd_model.order();

    std::vector<double> fwd, bwd;
    if (have_fwd)
        fwd = ar_extrapolate(fwd_model, left, gap_len);
    if (have_bwd) {
        std::vector<double> rev(right.rbegin(), right.rend());
        std::vector<double> tail = ar_extrapolate(bwd_model, rev, gap_len);
        bwd.assign(tail.rbegin(), tail.rend());
    }

    std::vector<double> out = y;
    for (std::size_t i = 0; i < gap_len; ++i) {
        const std::size_t idx = mask.gap_start + i;
        if (have_fwd && have_bwd) {
            const double u =
                gap_len > 1 ? static_cast<double>(i) / static_cast<double>(gap_len - 1) : 0.5;
            const double wf = 0.5 * (1.0 + std::cos(M_PI * u));
            out[idx] = wf * fwd[i] + (1.0 - wf) * bwd[i];
        } else if (have_fwd) {
            out[idx] = fwd[i];
        } else if (have_bwd) {
            out[idx] = bwd[i];
        } else {
            out[idx] = 0.0;
        }
    }

    AudioSignal result{std::move(out), obs.signal.sample_rate};
    if (fade_ms > 0.0)
        result = sim_inpaint(obs, result, fade_ms);
    return result;
}

AudioSignal sim_inpaint(const Observation& obs, const AudioSignal& guide, double fade_ms) {
    const GapMask& mask = obs.mask;
    if (guide.size() != mask.frame_len)
        raise(errc::shape_mismatch, "guide length must equal the observation frame length");
    if (fade_ms < 0.0)
        raise(errc::invalid_argument, "fade length must be >= 0");

    const std::vector<double>& y = obs.signal.samples;
    const std::size_t n = mask.frame_len;
    const std::size_t gap_len = mask.gap_samples();

    std::size_t width =
        static_cast<std::size_t>(std::llround(fade_ms / 1000.0 * obs.signal.sample_rate));
    if (gap_len < 2 * width)
        width = gap_len / 2;

    std::vector<double> out = y;
    for (std::size_t i = mask.gap_start; i <= mask.gap_end; ++i)
        out[i] = guide.samples[i];

    // Fades mix the guide into the observed samples flanking the gap, so
    // the transition is seamless and a perfect guide reproduces the
    // reference exactly (delta form keeps identical content bit-exact).
    const std::size_t wl = std::min(width, mask.gap_start);
    for (std::size_t i = 0; i < wl; ++i) {
        const std::size_t idx = mask.gap_start - wl + i;
        const double u = static_cast<double>(i) / static_cast<double>(wl);
        const double g = 0.5 * (1.0 - std::cos(M_PI * u));
        out[idx] = y[idx] + g * (guide.samples[idx] - y[idx]);
    }
    const std::size_t wr = std::min(width, n - 1 - mask.gap_end);
    for (std::size_t i = 0; i < wr; ++i) {
        const std::size_t idx = mask.gap_end + 1 + i;
        const double u = static_cast<double>(i + 1) / static_cast<double>(wr);
        const double g = 0.5 * (1.0 - std::cos(M_PI * u));
        out[idx] = guide.samples[idx] + g * (y[idx] - guide.samples[idx]);
    }
    return AudioSignal{std::move(out), obs.signal.sample_rate};
}

GapMetrics gap_metrics(const AudioSignal& reconstruction, const AudioSignal& reference,
                       const GapMask& mask) {
    if (reconstruction.size() != reference.size() || reconstruction.size() != mask.frame_len)
        raise(errc::shape_mismatch, "metric inputs must share the mask frame length");

    GapMetrics m;

    double sq = 0.0;
    for (std::size_t i = mask.gap_start; i <= mask.gap_end; ++i) {
        const double d = reconstruction.samples[i] - reference.samples[i];
        sq += d * d;
    }
    m.gap_rmse = std::sqrt(sq / static_cast<double>(mask.gap_samples()));

    // Log-spectral distance over STFT frames fully inside the gap; 0 when
    // the gap holds no complete frame.
    const StftConfig cfg{};
    if (reconstruction.size() >= cfg.window_len) {
        const FeatureMatrix a = stft_magnitude(reconstruction, cfg);
        const FeatureMatrix b = stft_magnitude(reference, cfg);
        constexpr double kFloor = 1e-10;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t t = 0; t < a.frame_count; ++t) {
            const std::size_t fs = t * cfg.hop;
            const std::size_t fe = fs + cfg.window_len;
            if (fs < mask.gap_start || fe > mask.gap_end + 1)
                continue;
            double acc = 0.0;
            for (std::size_t f = 0; f < a.bin_count; ++f) {
                const double d =
                    20.0 * (std::log10(a.frame(t)[f] + kFloor) - std::log10(b.frame(t)[f] + kFloor));
                acc += d * d;
            }
            sum += std::sqrt(acc / static_cast<double>(a.bin_count));
            ++count;
        }
        if (count > 0)
            m.gap_log_spectral_db = sum / static_cast<double>(count);
    }

    // Discontinuity of the error signal at the gap edges.
    double jump = 0.0;
    auto err = [&](std::size_t i) {
        return reconstruction.samples[i] - reference.samples[i];
    };
    if (mask.gap_start >= 1)
        jump = std::max(jump, std::abs(err(mask.gap_start) - err(mask.gap_start - 1)));
    if (mask.gap_end + 1 < mask.frame_len)
        jump = std::max(jump, std::abs(err(mask.gap_end + 1) - err(mask.gap_end)));
    m.boundary_jump = jump;
    return m;
}

} // namespace simdps
