#pragma once

#include <cstddef>
#include <vector>

#include "dsp.hpp"
#include "signal.hpp"

namespace simdps {

// Autoregressive model in prediction form: x[t] ~ sum_k coeff[k] * x[t-1-k].
struct ArModel {
    std::vector<double> coefficients;
    std::size_t order() const { return coefficients.size(); }
};

// Burg-method fit minimizing combined forward/backward prediction error.
// An all-zero context yields the zero model.
ArModel ar_fit(const AudioSignal& context, std::size_t order);

// Extrapolate len samples beyond the given history.
std::vector<double> ar_extrapolate(const ArModel& model, const std::vector<double>& history,
                                   std::size_t len);

// Low-anchor inpainting: forward extrapolation from the left context and
// backward from the right, blended by a raised-cosine ramp across the gap.
// The observed region is copied from the observation exactly.
AudioSignal ar_inpaint(const Observation& obs, std::size_t order, double fade_ms = 0.0);

// Direct insertion of the retrieved guide with short crossfades into the
// observed context on both sides of the gap. The fades live in the
// observed region abutting the gap, so a guide equal to the reference
// reproduces it exactly.
AudioSignal sim_inpaint(const Observation& obs, const AudioSignal& guide, double fade_ms = 10.0);

struct GapMetrics {
    double gap_rmse = 0.0;
    double gap_log_spectral_db = 0.0; // mean over STFT frames fully inside the gap
    double boundary_jump = 0.0;       // max |d(r - ref)| across the two gap edges
};

GapMetrics gap_metrics(const AudioSignal& reconstruction, const AudioSignal& reference,
                       const GapMask& mask);

} // namespace simdps
