#include "simsearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace simdps {

SearchConfig make_default_search_config() {
    SearchConfig cfg;
    cfg.specs = {
        FeatureSpec{FeatureKind::stft_mag, 1.0, 0.75},
        FeatureSpec{FeatureKind::chroma, 1.0, cfg.context_seconds},
    };
    return cfg;
}

void validate_search_config(const SearchConfig& cfg) {
    if (!(cfg.search_rate > 0.0))
        raise(errc::invalid_argument, "search rate must be positive");
    if (!(cfg.context_seconds > 0.0))
        raise(errc::invalid_argument, "context length must be positive");
    if (cfg.coarse_hop == 0)
        raise(errc::invalid_argument, "coarse hop must be >= 1");
    validate_stft_config(cfg.stft);
    if (cfg.coarse_hop % cfg.stft.hop != 0)
        raise(errc::invalid_argument,
              "coarse hop must be a multiple of the feature hop so candidate "
              "windows align with the precomputed frame grid");
    if (cfg.specs.empty())
        raise(errc::invalid_argument, "at least one feature spec is required");
    for (const auto& s : cfg.specs) {
        if (!(s.alpha >= 0.0) || !std::isfinite(s.alpha))
            raise(errc::invalid_argument, "spec alpha must be finite and >= 0");
        if (!(s.ramp_seconds > 0.0))
            raise(errc::invalid_argument, "spec ramp must be positive");
    }
}

std::vector<AudioSignal> build_corpus(const AudioSignal& track, std::size_t excerpt_start,
                                      std::size_t excerpt_len) {
    if (excerpt_len == 0 || excerpt_start + excerpt_len > track.size())
        raise(errc::invalid_argument, "excerpt region outside track");
    if (excerpt_start + excerpt_len == track.size() && excerpt_start == 0)
        raise(errc::data, "corpus is empty: the excerpt covers the whole track");

    std::vector<AudioSignal> corpus;
    if (excerpt_start > 0) {
        std::vector<double> before(track.samples.begin(),
                                   track.samples.begin() + static_cast<long>(excerpt_start));
        corpus.push_back(AudioSignal{std::move(before), track.sample_rate});
    }
    const std::size_t after_start = excerpt_start + excerpt_len;
    if (after_start < track.size()) {
        std::vector<double> after(track.samples.begin() + static_cast<long>(after_start),
                                  track.samples.end());
        corpus.push_back(AudioSignal{std::move(after), track.sample_rate});
    }
    return corpus;
}

std::vector<FeatureMatrix> extract_features(const AudioSignal& x, const SearchConfig& cfg) {
    // One STFT pass feeds every spec.
    FeatureMatrix stft = stft_magnitude(x, cfg.stft);
    FeatureMatrix chroma;
    bool have_chroma = false;

    std::vector<FeatureMatrix> feats;
    feats.reserve(cfg.specs.size());
    for (const auto& s : cfg.specs) {
        if (s.kind == FeatureKind::stft_mag) {
            feats.push_back(stft);
        } else {
            if (!have_chroma) {
                chroma = chromagram(stft, x.sample_rate, cfg.stft);
                have_chroma = true;
            }
            feats.push_back(chroma);
        }
    }
    return feats;
}

GapMask scale_mask(const GapMask& mask, double from_rate, double to_rate) {
    const double r = to_rate / from_rate;
    const long long n = std::llround(static_cast<double>(mask.frame_len) * r);
    long long start = std::llround(static_cast<double>(mask.gap_start) * r);
    long long end_excl = std::llround(static_cast<double>(mask.gap_end + 1) * r);
    start = std::clamp(start, 0LL, n - 1);
    end_excl = std::clamp(end_excl, start + 1, n);
    return mask_from_interval(static_cast<std::size_t>(n), static_cast<std::size_t>(start),
                              static_cast<std::size_t>(end_excl - 1));
}

std::vector<double> context_frame_weights(const GapMask& mask, const StftConfig& stft, double rate,
                                          double context_seconds, double ramp_seconds,
                                          std::size_t frame_count) {
    const std::size_t ctx = static_cast<std::size_t>(std::llround(context_seconds * rate));
    const std::size_t gap_start = mask.gap_start;
    const std::size_t post_start = mask.gap_end + 1;
    const std::size_t pre_floor = gap_start > ctx ? gap_start - ctx : 0;

    std::vector<double> w(frame_count, 0.0);
    for (std::size_t t = 0; t < frame_count; ++t) {
        const std::size_t fs = t * stft.hop;
        const std::size_t fe = fs + stft.window_len; // exclusive
        double dist_s = -1.0;
        if (fe <= gap_start && fs >= pre_floor) {
            dist_s = static_cast<double>(gap_start - fe) / rate;
        } else if (fs >= post_start && fe <= std::min(mask.frame_len, post_start + ctx)) {
            dist_s = static_cast<double>(fs - post_start) / rate;
        }
        if (dist_s >= 0.0)
            w[t] = std::max(0.0, 1.0 - dist_s / ramp_seconds);
    }
    return w;
}

std::vector<ResolvedSpec> resolve_specs(const SearchConfig& cfg, const GapMask& search_mask,
                                        std::size_t frame_count) {
    std::vector<ResolvedSpec> out;
    out.reserve(cfg.specs.size());
    for (const auto& s : cfg.specs) {
        ResolvedSpec r;
        r.kind = s.kind;
        r.alpha = s.alpha;
        r.frame_weights = context_frame_weights(search_mask, cfg.stft, cfg.search_rate,
                                                cfg.context_seconds, s.ramp_seconds, frame_count);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

// Shared by similarity_cost and the sliding coarse scan so both paths
// accumulate in the same order.
double cost_with_offset(const std::vector<FeatureMatrix>& obs,
                        const std::vector<FeatureMatrix>& cand, std::size_t cand_frame_offset,
                        const std::vector<ResolvedSpec>& specs) {
    double total = 0.0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const ResolvedSpec& spec = specs[k];
        if (spec.alpha == 0.0)
            continue;
        const FeatureMatrix& a = obs[k];
        const FeatureMatrix& b = cand[k];
        double spec_sum = 0.0;
        for (std::size_t t = 0; t < a.frame_count; ++t) {
            const double w = spec.frame_weights[t];
            if (w == 0.0)
                continue;
            const double* fa = a.frame(t);
            const double* fb = b.frame(cand_frame_offset + t);
            double sq = 0.0;
            for (std::size_t f = 0; f < a.bin_count; ++f) {
                const double d = fa[f] - fb[f];
                sq += d * d;
            }
            spec_sum += w * sq;
        }
        total += spec.alpha * spec_sum;
    }
    return total;
}

} // namespace

double similarity_cost(const std::vector<FeatureMatrix>& obs_features,
                       const std::vector<FeatureMatrix>& cand_features,
                       const std::vector<ResolvedSpec>& specs) {
    if (obs_features.size() != cand_features.size() || obs_features.size() != specs.size())
        raise(errc::shape_mismatch, "per-spec feature lists must have the same length");
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (obs_features[k].frame_count != cand_features[k].frame_count)
            raise(errc::shape_mismatch, "feature frame counts are not aligned");
        if (obs_features[k].bin_count != cand_features[k].bin_count)
            raise(errc::shape_mismatch, "feature bin counts are not aligned");
        if (specs[k].frame_weights.size() != obs_features[k].frame_count)
            raise(errc::shape_mismatch, "frame weights are not aligned with the feature frames");
    }
    return cost_with_offset(obs_features, cand_features, 0, specs);
}

CoarseResult coarse_search(const std::vector<AudioSignal>& corpus, const Observation& obs,
                           const SearchConfig& cfg) {
    validate_search_config(cfg);
    if (corpus.empty())
        raise(errc::data, "similarity search needs a non-empty corpus");

    const AudioSignal obs_search = resample(obs.signal, cfg.search_rate);
    const GapMask search_mask = scale_mask(obs.mask, obs.signal.sample_rate, cfg.search_rate);
    const std::size_t n_search = obs_search.size();
    if (n_search < cfg.stft.window_len)
        raise(errc::data, "observation too short for the search features");

    const std::vector<FeatureMatrix> obs_feats = extract_features(obs_search, cfg);
    const std::size_t obs_frames = obs_feats.front().frame_count;
    const std::vector<ResolvedSpec> specs = resolve_specs(cfg, search_mask, obs_frames);

    const std::size_t frame_step = cfg.coarse_hop / cfg.stft.hop;

    CoarseResult best;
    best.cost = std::numeric_limits<double>::infinity();
    bool found = false;

    for (std::size_t sid = 0; sid < corpus.size(); ++sid) {
        const AudioSignal src = resample(corpus[sid], cfg.search_rate);
        if (src.size() < n_search)
            continue; // cannot host a full candidate window
        const std::vector<FeatureMatrix> src_feats = extract_features(src, cfg);
        const std::size_t src_frames = src_feats.front().frame_count;
        if (src_frames < obs_frames)
            continue;

        const std::size_t max_by_samples = (src.size() - n_search) / cfg.coarse_hop;
        const std::size_t max_by_frames = (src_frames - obs_frames) / frame_step;
        const std::size_t g_max = std::min(max_by_samples, max_by_frames);

        for (std::size_t g = 0; g <= g_max; ++g) {
            const double c = cost_with_offset(obs_feats, src_feats, g * frame_step, specs);
            if (c < best.cost) {
                best = CoarseResult{sid, g * cfg.coarse_hop, c};
                found = true;
            }
        }
    }
    if (!found)
        raise(errc::data, "no candidate placement: every corpus item is shorter than the window");
    return best;
}

long long refine_offset(const AudioSignal& y, const GapMask& mask, const AudioSignal& source,
                        long long coarse_start, std::size_t window_span) {
    if (y.size() != mask.frame_len)
        raise(errc::shape_mismatch, "observation length does not match mask");
    if (mask.gap_start == 0 || mask.gap_end + 1 == mask.frame_len)
        return 0; // no boundary sample on one side; skip refinement

    // Compares the observed samples flanking the gap with the candidate
    // samples at the corresponding context positions, so an exactly
    // aligned candidate has zero residual at offset 0.
    const double left_ref = y.samples[mask.gap_start - 1];
    const double right_ref = y.samples[mask.gap_end + 1];
    const long long half = static_cast<long long>(window_span / 2);
    const long long src_len = static_cast<long long>(source.size());

    long long best_o = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    // Visit offsets as 0, -1, +1, -2, +2, ... and keep strict improvements:
    // ties resolve to the smallest magnitude, negative side first.
    for (long long mag = 0; mag <= half; ++mag) {
        for (int sgn : {-1, +1}) {
            if (mag == 0 && sgn > 0)
                continue;
            const long long o = sgn * mag;
            const long long li = coarse_start + static_cast<long long>(mask.gap_start) - 1 + o;
            const long long ri = coarse_start + static_cast<long long>(mask.gap_end) + 1 + o;
            if (li < 0 || ri >= src_len)
                continue; // window clamped to the source bounds
            const double c = std::abs(left_ref - source.samples[static_cast<std::size_t>(li)]) +
                             std::abs(right_ref - source.samples[static_cast<std::size_t>(ri)]);
            if (c < best_cost) {
                best_cost = c;
                best_o = o;
            }
        }
    }
    return best_o;
}

AudioSignal extract_guide(const AudioSignal& source, long long start, std::size_t n,
                          double search_rate) {
    if (n == 0)
        raise(errc::invalid_argument, "guide length must be >= 1");
    const double ratio = source.sample_rate / search_rate;
    const long long start_w = std::llround(static_cast<double>(start) * ratio);
    std::vector<double> out(n, 0.0);
    const long long len = static_cast<long long>(source.size());
    for (std::size_t i = 0; i < n; ++i) {
        const long long idx = start_w + static_cast<long long>(i);
        if (idx >= 0 && idx < len)
            out[i] = source.samples[static_cast<std::size_t>(idx)];
    }
    return AudioSignal{std::move(out), source.sample_rate};
}

CandidateMatch search(const std::vector<AudioSignal>& corpus, const Observation& obs,
                      const SearchConfig& cfg) {
    const CoarseResult coarse = coarse_search(corpus, obs, cfg);
    const AudioSignal& src_working = corpus[coarse.source_id];
    const double working_rate = obs.signal.sample_rate;

    // Boundary refinement on the search-rate grid.
    const AudioSignal obs_search = resample(obs.signal, cfg.search_rate);
    const GapMask search_mask = scale_mask(obs.mask, working_rate, cfg.search_rate);
    const AudioSignal src_search = resample(src_working, cfg.search_rate);
    const long long offset =
        refine_offset(obs_search, search_mask, src_search,
                      static_cast<long long>(coarse.start), cfg.coarse_hop);

    // Scale to the working rate, then re-align within the scaling
    // uncertainty of one search-rate sample.
    const double ratio = working_rate / cfg.search_rate;
    long long start_working =
        std::llround(static_cast<double>(static_cast<long long>(coarse.start) + offset) * ratio);
    if (working_rate != cfg.search_rate) {
        const std::size_t fine_span = 2 * static_cast<std::size_t>(std::ceil(ratio));
        start_working += refine_offset(obs.signal, obs.mask, src_working, start_working, fine_span);
    }

    CandidateMatch match;
    match.source_id = coarse.source_id;
    match.coarse_start = coarse.start;
    match.offset = offset;
    match.cost = coarse.cost;
    match.working_start = start_working;
    match.guide = extract_guide(src_working, start_working, obs.mask.frame_len, working_rate);
    return match;
}

} // namespace simdps
