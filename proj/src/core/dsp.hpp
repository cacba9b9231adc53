#pragma once

#include <cstddef>
#include <vector>

#include "signal.hpp"

namespace simdps {

struct StftConfig {
    std::size_t window_len = 1024;
    std::size_t fft_size = 1024;
    std::size_t hop = 256;
};

void validate_stft_config(const StftConfig& cfg);

// Time-major feature matrix: frames x bins, nonnegative entries.
struct FeatureMatrix {
    std::size_t frame_count = 0;
    std::size_t bin_count = 0;
    double frame_rate = 0.0;  // frames per second
    std::vector<double> data; // row-major, frame_count * bin_count

    double* frame(std::size_t t) { return data.data() + t * bin_count; }
    const double* frame(std::size_t t) const { return data.data() + t * bin_count; }
};

// Band-limited rational resampler: windowed-sinc polyphase, Kaiser window,
// 64 taps per phase. Output length = round(len * target / source).
AudioSignal resample(const AudioSignal& x, double target_rate);

// Onesided STFT magnitudes with a periodic Hann window. Frames start at
// sample 0 and advance by hop with no centering or padding, so frame t
// covers samples [t*hop, t*hop + window_len). frame_count =
// 1 + floor((len - window_len) / hop).
FeatureMatrix stft_magnitude(const AudioSignal& x, const StftConfig& cfg);

// 12-bin pitch-class energy profile per frame, folded across octaves.
// Bin energies of the STFT magnitude matrix are accumulated by pitch class
// (C = 0, reference A4 = tuning_ref), bins below 55 Hz ignored; each frame
// is L2-normalized, all-zero frames left zero.
FeatureMatrix chromagram(const FeatureMatrix& stft, double sample_rate, const StftConfig& cfg,
                         double tuning_ref = 440.0);

// Raised-cosine equal-gain crossfade of width fade_ms centred at boundary:
// output equals a before the fade region and b after it.
AudioSignal crossfade_splice(const AudioSignal& a, const AudioSignal& b, std::size_t boundary,
                             double fade_ms);

std::size_t stft_frame_count(std::size_t len, const StftConfig& cfg);

} // namespace simdps
