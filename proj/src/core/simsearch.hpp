#pragma once

#include <cstddef>
#include <vector>

#include "dsp.hpp"
#include "signal.hpp"

namespace simdps {

enum class FeatureKind { stft_mag, chroma };

// One feature space entering the similarity cost: its contribution weight
// and the shape of the per-frame ramp that emphasizes frames near the gap.
struct FeatureSpec {
    FeatureKind kind = FeatureKind::stft_mag;
    double alpha = 1.0;
    double ramp_seconds = 0.75; // weight falls linearly to 0 this far from the boundary
};

struct SearchConfig {
    double search_rate = 12000.0;
    double context_seconds = 3.0;
    std::size_t coarse_hop = 256; // candidate grid step, samples at search rate
    StftConfig stft{1024, 1024, 256};
    std::vector<FeatureSpec> specs;
};

// Defaults: STFT magnitudes with a short 0.75-s ramp (timbral match near
// the boundary) plus chroma ramped over the whole context (longer-range
// melodic match), both with alpha 1.
SearchConfig make_default_search_config();

void validate_search_config(const SearchConfig& cfg);

// Feature spec with its per-frame weights materialized on the observation
// frame grid.
struct ResolvedSpec {
    FeatureKind kind = FeatureKind::stft_mag;
    double alpha = 1.0;
    std::vector<double> frame_weights;
};

struct CandidateMatch {
    std::size_t source_id = 0;
    std::size_t coarse_start = 0; // candidate start, samples at search rate
    long long offset = 0;         // boundary-continuity refinement, search-rate samples
    double cost = 0.0;
    long long working_start = 0;  // final extraction start at the working rate
    AudioSignal guide;            // length n at the working rate
};

// Within-track corpus: the part of the track before the excerpt and the
// part after it, in that order. Empty sides are dropped.
std::vector<AudioSignal> build_corpus(const AudioSignal& track, std::size_t excerpt_start,
                                      std::size_t excerpt_len);

// Per-spec feature matrices of a search-rate signal. The STFT is computed
// once and shared by all specs derived from it.
std::vector<FeatureMatrix> extract_features(const AudioSignal& x, const SearchConfig& cfg);

// Frame weights for one spec on the frame grid of a length-n window whose
// gap is given by mask (search-rate samples). Frames straddling the gap or
// leaving the context windows get weight 0; within a context window the
// weight ramps linearly from 1 at the boundary to 0 at ramp_seconds away.
std::vector<double> context_frame_weights(const GapMask& mask, const StftConfig& stft, double rate,
                                          double context_seconds, double ramp_seconds,
                                          std::size_t frame_count);

std::vector<ResolvedSpec> resolve_specs(const SearchConfig& cfg, const GapMask& search_mask,
                                        std::size_t frame_count);

// Weighted squared-distance cost between aligned per-spec feature
// matrices. Frame counts must agree per spec.
double similarity_cost(const std::vector<FeatureMatrix>& obs_features,
                       const std::vector<FeatureMatrix>& cand_features,
                       const std::vector<ResolvedSpec>& specs);

struct CoarseResult {
    std::size_t source_id = 0;
    std::size_t start = 0; // samples at search rate
    double cost = 0.0;
};

// Scan every source on the coarse grid and return the minimum-cost
// placement; ties break to the earliest (source_id, start).
CoarseResult coarse_search(const std::vector<AudioSignal>& corpus, const Observation& obs,
                           const SearchConfig& cfg);

// Boundary-continuity refinement: minimizes the absolute mismatch between
// the observed samples flanking the gap and the candidate samples at the
// corresponding positions, over offsets in [-window_span/2, window_span/2]
// (clamped to the source bounds). Ties break to the smallest |offset|,
// negative first. Returns 0 when the gap touches the frame edge.
long long refine_offset(const AudioSignal& y, const GapMask& mask, const AudioSignal& source,
                        long long coarse_start, std::size_t window_span);

// Length-n slice of source at the working rate; start is given in
// search-rate samples and scaled by the rate ratio. Out-of-range samples
// are zero.
AudioSignal extract_guide(const AudioSignal& source, long long start, std::size_t n,
                          double search_rate);

// Full retrieval pipeline: coarse grid search, search-rate boundary
// refinement, index scaling, and a second single-sample-accurate
// refinement pass at the working rate.
CandidateMatch search(const std::vector<AudioSignal>& corpus, const Observation& obs,
                      const SearchConfig& cfg);

// Gap geometry mapped onto the search rate.
GapMask scale_mask(const GapMask& mask, double from_rate, double to_rate);

} // namespace simdps
