#include "signal.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace simdps {

AudioSignal make_signal(std::vector<double> samples, double sample_rate) {
    if (samples.empty())
        raise(errc::invalid_argument, "signal must contain at least one sample");
    if (!(sample_rate > 0.0))
        raise(errc::invalid_argument, "sample rate must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i]))
            raise(errc::numeric, "non-finite sample at index " + std::to_string(i));
    }
    return AudioSignal{std::move(samples), sample_rate};
}

GapMask mask_from_interval(std::size_t frame_len, std::size_t gap_start, std::size_t gap_end) {
    if (frame_len == 0 || gap_start > gap_end || gap_end >= frame_len)
        raise(errc::invalid_argument,
              "invalid gap interval [" + std::to_string(gap_start) + ", " +
                  std::to_string(gap_end) + "] for frame of " + std::to_string(frame_len) +
                  " samples");
    return GapMask{frame_len, gap_start, gap_end};
}

Observation apply_mask(const AudioSignal& x, const GapMask& mask, double noise_sigma, Rng& rng) {
    if (x.size() != mask.frame_len)
        raise(errc::shape_mismatch, "signal length does not match mask frame length");
    if (noise_sigma < 0.0)
        raise(errc::invalid_argument, "measurement noise sigma must be >= 0");

    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double eps = noise_sigma > 0.0 ? noise_sigma * rng.gaussian() : 0.0;
        y[i] = mask.in_gap(i) ? 0.0 : x.samples[i] + eps;
    }
    return Observation{AudioSignal{std::move(y), x.sample_rate}, mask, noise_sigma};
}

Observation observation_from_signal(AudioSignal y, const GapMask& mask, double noise_sigma) {
    if (y.size() != mask.frame_len)
        raise(errc::shape_mismatch, "signal length does not match mask frame length");
    for (std::size_t i = mask.gap_start; i <= mask.gap_end; ++i)
        y.samples[i] = 0.0;
    return Observation{std::move(y), mask, noise_sigma};
}

AudioSignal null_project(const AudioSignal& z, const GapMask& mask) {
    if (z.size() != mask.frame_len)
        raise(errc::shape_mismatch, "signal length does not match mask frame length");
    std::vector<double> out(z.size(), 0.0);
    for (std::size_t i = mask.gap_start; i <= mask.gap_end; ++i)
        out[i] = z.samples[i];
    return AudioSignal{std::move(out), z.sample_rate};
}

AudioSignal synthetic_measurement(const Observation& obs, const AudioSignal& guide) {
    const GapMask& mask = obs.mask;
    if (guide.size() != mask.frame_len)
        raise(errc::shape_mismatch, "guide length does not match mask frame length");
    std::vector<double> out = obs.signal.samples;
    for (std::size_t i = mask.gap_start; i <= mask.gap_end; ++i)
        out[i] = guide.samples[i];
    return AudioSignal{std::move(out), obs.signal.sample_rate};
}

} // namespace simdps
