#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/simsearch.hpp"
#include "oracles.hpp"

using namespace simdps;

namespace {

// Small search geometry so brute force stays fast: everything at 8 kHz,
// 256-sample windows.
SearchConfig small_config() {
    SearchConfig cfg;
    cfg.search_rate = 8000.0;
    cfg.context_seconds = 0.2;
    cfg.coarse_hop = 64;
    cfg.stft = StftConfig{256, 256, 64};
    cfg.specs = {FeatureSpec{FeatureKind::stft_mag, 1.0, 0.1},
                 FeatureSpec{FeatureKind::chroma, 1.0, 0.2}};
    return cfg;
}

AudioSignal noise_signal(std::size_t n, double rate, std::uint64_t seed, double amp = 0.3) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x)
        v = amp * rng.gaussian();
    return AudioSignal{std::move(x), rate};
}

AudioSignal smooth_signal(std::size_t n, double rate, std::uint64_t seed) {
    Rng rng(seed);
    const double f1 = 20.0 + 40.0 * rng.uniform();
    const double f2 = 60.0 + 60.0 * rng.uniform();
    const double p1 = 2.0 * M_PI * rng.uniform();
    const double p2 = 2.0 * M_PI * rng.uniform();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        x[i] = 0.4 * std::sin(2.0 * M_PI * f1 * t + p1) + 0.2 * std::sin(2.0 * M_PI * f2 * t + p2);
    }
    return AudioSignal{std::move(x), rate};
}

Observation masked(const AudioSignal& x, std::size_t gs, std::size_t ge) {
    Rng rng(0);
    return apply_mask(x, mask_from_interval(x.size(), gs, ge), 0.0, rng);
}

} // namespace

TEST_CASE("build_corpus splits the track around the excerpt") {
    const AudioSignal track = noise_signal(60000, 1000.0, 1);
    const auto corpus = build_corpus(track, 30000, 6000);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].size() == 30000);
    CHECK(corpus[1].size() == 24000);
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(corpus[1].samples[i] == track.samples[36000 + i]);
}

TEST_CASE("build_corpus with the excerpt at the track start has one item") {
    const AudioSignal track = noise_signal(10000, 1000.0, 2);
    const auto corpus = build_corpus(track, 0, 4000);
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].size() == 6000);
}

TEST_CASE("build_corpus rejects an excerpt covering the whole track") {
    const AudioSignal track = noise_signal(5000, 1000.0, 3);
    CHECK_THROWS_AS(build_corpus(track, 0, 5000), Error);
    CHECK_THROWS_AS(build_corpus(track, 1000, 5000), Error);
}

TEST_CASE("context frame weights: support, range, and straddle exclusion") {
    const SearchConfig cfg = small_config();
    const std::size_t n = 8000;
    const GapMask mask = mask_from_interval(n, 3000, 4999);
    const std::size_t frames = stft_frame_count(n, cfg.stft);

    for (const auto& spec : cfg.specs) {
        const std::vector<double> w = context_frame_weights(
            mask, cfg.stft, cfg.search_rate, cfg.context_seconds, spec.ramp_seconds, frames);
        REQUIRE(w.size() == frames);
        for (std::size_t t = 0; t < frames; ++t) {
            CHECK(w[t] >= 0.0);
            CHECK(w[t] <= 1.0);
            const std::size_t fs = t * cfg.stft.hop;
            const std::size_t fe = fs + cfg.stft.window_len;
            const bool straddles = fs < 3000 && fe > 3000;
            const bool in_gap = fs >= 3000 && fe <= 5000;
            const bool straddles_end = fs < 5000 && fe > 5000;
            if (straddles || in_gap || straddles_end)
                CHECK(w[t] == 0.0);
            // beyond the context windows
            const double ctx = cfg.context_seconds * cfg.search_rate;
            if (fe <= 3000 - ctx || fs >= 5000 + ctx)
                CHECK(w[t] == 0.0);
        }
        // the frame nearest the boundary carries the hand-computed ramp value
        const std::size_t last_pre = (3000 - cfg.stft.window_len) / cfg.stft.hop;
        const std::size_t frame_end = last_pre * cfg.stft.hop + cfg.stft.window_len;
        const double dist_s = static_cast<double>(3000 - frame_end) / cfg.search_rate;
        CHECK(w[last_pre] ==
              doctest::Approx(1.0 - dist_s / spec.ramp_seconds).epsilon(1e-12));
        // and frames further out never exceed it
        for (std::size_t t = 0; t < last_pre; ++t)
            CHECK(w[t] <= w[last_pre] + 1e-12);
    }
}

TEST_CASE("similarity cost: hand-built two-frame, two-bin evaluation") {
    FeatureMatrix a, b;
    a.frame_count = b.frame_count = 2;
    a.bin_count = b.bin_count = 2;
    a.frame_rate = b.frame_rate = 1.0;
    a.data = {1.0, 1.0, 3.0, 0.0};
    b.data = {1.0 - 2.0, 1.0, 3.0, 0.0 - std::sqrt(2.0)}; // diff norms^2: 4 and 2

    ResolvedSpec spec;
    spec.kind = FeatureKind::stft_mag;
    spec.alpha = 1.0;
    spec.frame_weights = {1.0, 0.5};
    const double cost = similarity_cost({a}, {b}, {spec});
    CHECK(cost == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("similarity cost: identity, zero alphas, symmetry") {
    const SearchConfig cfg = small_config();
    const AudioSignal x = noise_signal(4000, cfg.search_rate, 5);
    const AudioSignal y = noise_signal(4000, cfg.search_rate, 6);
    const auto fx = extract_features(x, cfg);
    const auto fy = extract_features(y, cfg);
    const GapMask mask = mask_from_interval(4000, 1500, 2499);
    auto specs = resolve_specs(cfg, mask, fx.front().frame_count);

    CHECK(similarity_cost(fx, fx, specs) == 0.0);
    CHECK(similarity_cost(fx, fy, specs) == similarity_cost(fy, fx, specs));
    CHECK(similarity_cost(fx, fy, specs) > 0.0);

    for (auto& s : specs)
        s.alpha = 0.0;
    CHECK(similarity_cost(fx, fy, specs) == 0.0);
}

TEST_CASE("similarity cost rejects misaligned frames") {
    const SearchConfig cfg = small_config();
    const AudioSignal x = noise_signal(4000, cfg.search_rate, 5);
    const AudioSignal y = noise_signal(4256, cfg.search_rate, 6);
    const auto fx = extract_features(x, cfg);
    const auto fy = extract_features(y, cfg);
    const GapMask mask = mask_from_interval(4000, 1500, 2499);
    const auto specs = resolve_specs(cfg, mask, fx.front().frame_count);
    CHECK_THROWS_AS(similarity_cost(fx, fy, specs), Error);
}

TEST_CASE("coarse search equals exhaustive brute-force minimization") {
    const SearchConfig cfg = small_config();
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const AudioSignal x = noise_signal(8000, cfg.search_rate, seed * 100);
        const Observation obs = masked(x, 3000, 4999);
        const std::vector<AudioSignal> corpus = {
            noise_signal(16000, cfg.search_rate, seed * 100 + 1),
            noise_signal(12000, cfg.search_rate, seed * 100 + 2),
        };
        const CoarseResult got = coarse_search(corpus, obs, cfg);
        const oracles::BruteResult want = oracles::brute_force_coarse_search(corpus, obs, cfg);
        REQUIRE(want.found);
        CHECK(got.source_id == want.source_id);
        CHECK(got.start == want.start);
        CHECK(got.cost == want.cost);
    }
}

TEST_CASE("coarse search equals brute force across the working-rate resample") {
    SearchConfig cfg = small_config();
    const double working = 22050.0;
    const AudioSignal x = noise_signal(22050, working, 900); // 1 s
    const Observation obs = masked(x, 8000, 13999);
    const std::vector<AudioSignal> corpus = {noise_signal(44100, working, 901),
                                             noise_signal(33000, working, 902)};
    const CoarseResult got = coarse_search(corpus, obs, cfg);
    const oracles::BruteResult want = oracles::brute_force_coarse_search(corpus, obs, cfg);
    REQUIRE(want.found);
    CHECK(got.source_id == want.source_id);
    CHECK(got.start == want.start);
    CHECK(got.cost == want.cost);
}

TEST_CASE("planted exact excerpt is retrieved with zero cost") {
    const SearchConfig cfg = small_config();
    const AudioSignal x = smooth_signal(8000, cfg.search_rate, 77);
    const Observation obs = masked(x, 3000, 4999);

    // plant the full uncorrupted excerpt at a grid-aligned position
    const std::size_t plant_at = 1920; // multiple of coarse_hop
    std::vector<double> src = noise_signal(14000, cfg.search_rate, 78).samples;
    for (std::size_t i = 0; i < x.size(); ++i)
        src[plant_at + i] = x.samples[i];
    const std::vector<AudioSignal> corpus = {noise_signal(12000, cfg.search_rate, 79),
                                             AudioSignal{src, cfg.search_rate}};

    const CoarseResult got = coarse_search(corpus, obs, cfg);
    CHECK(got.source_id == 1);
    CHECK(got.start == plant_at);
    CHECK(got.cost < 1e-9);

    // the full pipeline extracts the ground truth in the gap
    const CandidateMatch match = search(corpus, obs, cfg);
    CHECK(match.source_id == 1);
    CHECK(match.cost < 1e-9);
    for (std::size_t i = obs.mask.gap_start; i <= obs.mask.gap_end; ++i)
        CHECK(match.guide.samples[i] == x.samples[i]);
}

TEST_CASE("scaling every alpha leaves the argmin unchanged") {
    SearchConfig cfg = small_config();
    const AudioSignal x = noise_signal(8000, cfg.search_rate, 300);
    const Observation obs = masked(x, 3000, 4999);
    const std::vector<AudioSignal> corpus = {noise_signal(14000, cfg.search_rate, 301),
                                             noise_signal(11000, cfg.search_rate, 302)};
    const CoarseResult base = coarse_search(corpus, obs, cfg);
    for (auto& s : cfg.specs)
        s.alpha *= 3.7;
    const CoarseResult scaled = coarse_search(corpus, obs, cfg);
    CHECK(base.source_id == scaled.source_id);
    CHECK(base.start == scaled.start);
    CHECK(scaled.cost == doctest::Approx(3.7 * base.cost).epsilon(1e-12));
}

TEST_CASE("coarse search error paths") {
    const SearchConfig cfg = small_config();
    const AudioSignal x = noise_signal(8000, cfg.search_rate, 1);
    const Observation obs = masked(x, 3000, 4999);
    CHECK_THROWS_AS(coarse_search({}, obs, cfg), Error);
    // all corpus items shorter than the candidate window
    const std::vector<AudioSignal> tiny = {noise_signal(4000, cfg.search_rate, 2)};
    CHECK_THROWS_AS(coarse_search(tiny, obs, cfg), Error);
}

TEST_CASE("refine_offset: aligned copy with flat boundaries gives zero offset") {
    const std::size_t n = 2000;
    AudioSignal x = smooth_signal(n, 8000.0, 5);
    // locally flat boundary neighbourhoods make offset 0 strictly optimal
    x.samples[999] = x.samples[1000 - 1] = x.samples[998];
    x.samples[1500] = x.samples[1501];
    const Observation obs = masked(x, 1000, 1499);

    std::vector<double> src(3000, 0.0);
    const std::size_t at = 700;
    for (std::size_t i = 0; i < n; ++i)
        src[at + i] = x.samples[i];
    const long long o =
        refine_offset(obs.signal, obs.mask, AudioSignal{src, 8000.0}, at, 64);
    CHECK(o == 0);
}

TEST_CASE("refine_offset recovers a planted shift on smooth signals") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 2000;
        const AudioSignal x = smooth_signal(n, 8000.0, 1000 + seed);
        const Observation obs = masked(x, 900, 1399);
        Rng rng(seed);
        const long long k = static_cast<long long>(rng.uniform() * 65) - 32;

        // truly aligned at 1000; the coarse estimate overshoots by k
        std::vector<double> src(4000, 0.0);
        const long long ideal = 1000;
        for (std::size_t i = 0; i < n; ++i)
            src[static_cast<std::size_t>(ideal + static_cast<long long>(i))] = x.samples[i];
        const long long o =
            refine_offset(obs.signal, obs.mask, AudioSignal{src, 8000.0}, ideal + k, 64);
        if (o == -k)
            ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("refine_offset matches its exhaustive-window oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const AudioSignal x = noise_signal(1200, 8000.0, 5000 + seed);
        const Observation obs = masked(x, 500, 799);
        const AudioSignal src = noise_signal(2400, 8000.0, 6000 + seed);
        const long long got = refine_offset(obs.signal, obs.mask, src, 400, 64);
        const long long want = oracles::brute_force_refine(obs.signal, obs.mask, src, 400, 32);
        CHECK(got == want);
        CHECK(std::llabs(got) <= 32);

        // the chosen offset's boundary residual never exceeds the one at 0
        auto residual = [&](long long o) {
            const long long li = 400 + static_cast<long long>(obs.mask.gap_start) - 1 + o;
            const long long ri = 400 + static_cast<long long>(obs.mask.gap_end) + 1 + o;
            return std::abs(obs.signal.samples[obs.mask.gap_start - 1] -
                            src.samples[static_cast<std::size_t>(li)]) +
                   std::abs(obs.signal.samples[obs.mask.gap_end + 1] -
                            src.samples[static_cast<std::size_t>(ri)]);
        };
        CHECK(residual(got) <= residual(0));
    }
}

TEST_CASE("refine_offset ties resolve to zero on constant signals") {
    const AudioSignal x = make_signal(std::vector<double>(1000, 0.5), 8000.0);
    const Observation obs = masked(x, 400, 599);
    const AudioSignal src = make_signal(std::vector<double>(2000, 0.5), 8000.0);
    CHECK(refine_offset(obs.signal, obs.mask, src, 300, 64) == 0);
}

TEST_CASE("refine_offset skips gaps touching the frame edge") {
    const AudioSignal x = noise_signal(1000, 8000.0, 71);
    const Observation head = masked(x, 0, 99);
    const Observation tail = masked(x, 900, 999);
    const AudioSignal src = noise_signal(2000, 8000.0, 72);
    CHECK(refine_offset(head.signal, head.mask, src, 100, 64) == 0);
    CHECK(refine_offset(tail.signal, tail.mask, src, 100, 64) == 0);
}

TEST_CASE("extract_guide slices, pads, and scales indices") {
    const AudioSignal src = make_signal({1, 2, 3, 4, 5, 6}, 100.0);
    const AudioSignal plain = extract_guide(src, 0, 4, 100.0);
    CHECK(plain.samples == std::vector<double>{1, 2, 3, 4});

    const AudioSignal tail = extract_guide(src, 4, 4, 100.0);
    CHECK(tail.samples == std::vector<double>{5, 6, 0, 0});

    const AudioSignal head = extract_guide(src, -2, 4, 100.0);
    CHECK(head.samples == std::vector<double>{0, 0, 1, 2});

    // search index 1200 at 12 kHz maps to 4410 at 44.1 kHz
    std::vector<double> big(8000, 0.0);
    big[4410] = 1.0;
    const AudioSignal marker{big, 44100.0};
    const AudioSignal got = extract_guide(marker, 1200, 4, 12000.0);
    CHECK(got.samples[0] == 1.0);
}

TEST_CASE("search returns a guide of the right length with in-window offset") {
    const SearchConfig cfg = small_config();
    const double working = 22050.0;
    const AudioSignal x = smooth_signal(22050, working, 404);
    const Observation obs = masked(x, 8000, 13999);
    const std::vector<AudioSignal> corpus = {smooth_signal(50000, working, 404),
                                             noise_signal(40000, working, 406)};
    const CandidateMatch match = search(corpus, obs, cfg);
    CHECK(match.guide.size() == obs.mask.frame_len);
    CHECK(match.guide.sample_rate == working);
    CHECK(std::llabs(match.offset) <= static_cast<long long>(cfg.coarse_hop / 2));
    CHECK(match.cost >= 0.0);
}
