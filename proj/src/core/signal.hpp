#pragma once

#include <cstddef>
#include <vector>

#include "rng.hpp"

namespace simdps {

// Mono sample sequence with its sample rate. Values are amplitudes,
// nominally in [-1, 1]. Immutable by convention: operations return copies.
struct AudioSignal {
    std::vector<double> samples;
    double sample_rate = 0.0;

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Validating constructor: length >= 1, all samples finite, rate > 0.
AudioSignal make_signal(std::vector<double> samples, double sample_rate);

// Single missing interval [gap_start, gap_end] (inclusive both ends) inside
// a frame of frame_len samples. Realizes the diagonal binary masking
// operator as an index range; the matrix form is never materialized.
struct GapMask {
    std::size_t frame_len = 0;
    std::size_t gap_start = 0;
    std::size_t gap_end = 0;

    bool in_gap(std::size_t i) const { return i >= gap_start && i <= gap_end; }
    std::size_t gap_samples() const { return gap_end - gap_start + 1; }
};

GapMask mask_from_interval(std::size_t frame_len, std::size_t gap_start, std::size_t gap_end);

// Observed signal: gap samples are exactly zero by construction.
struct Observation {
    AudioSignal signal;
    GapMask mask;
    double noise_sigma = 0.0;
};

// y_i = m_i * (x_i + eps_i), eps ~ N(0, noise_sigma^2). Gap samples are 0.
Observation apply_mask(const AudioSignal& x, const GapMask& mask, double noise_sigma, Rng& rng);

// Observation from samples that already have the gap zeroed (or not; the
// gap region is forced to zero either way).
Observation observation_from_signal(AudioSignal y, const GapMask& mask, double noise_sigma = 0.0);

// Complement projector: gap samples preserved, observed samples zeroed.
AudioSignal null_project(const AudioSignal& z, const GapMask& mask);

// Splice: observed samples from obs, gap samples from guide.
AudioSignal synthetic_measurement(const Observation& obs, const AudioSignal& guide);

} // namespace simdps
