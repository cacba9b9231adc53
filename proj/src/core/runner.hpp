#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "guidance.hpp"
#include "signal.hpp"
#include "simsearch.hpp"

namespace simdps {

// Fully resolved run configuration. JSON in, defaults applied, JSON echo
// out; a run is reproducible from (echo, seed, inputs).
struct RunConfig {
    std::uint64_t seed = 0;
    std::string method = "simdps-l"; // dps | simdps-l | simdps-h | sim | lpc
    double working_rate = 44100.0;
    double excerpt_seconds = 6.0;
    double gap_start_seconds = -1.0; // < 0 -> centred
    double gap_duration_seconds = 2.0;
    double measurement_noise = 0.0;

    std::string denoiser = "gmm-demo"; // gaussian-demo | gmm-demo | stdio:... | tcp:...
    int denoiser_timeout_ms = 10000;

    SearchConfig search = make_default_search_config();

    std::size_t sampler_steps = 50;
    double sigma_min = 0.0; // 0 -> default exp(-5)
    double sigma_max = 8.0;
    double s_churn = 10.0;

    double omega_y = 0.3;
    std::optional<double> omega_aux; // unset -> method preset
    GradMode grad_mode = GradMode::exact_vjp;
    bool grad_mode_explicit = false;

    std::size_t ar_order = 256;
    double fade_ms = 10.0;
};

// Parse a config JSON object (possibly a report echo wrapped under
// "config") on top of the defaults. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// Effective auxiliary weight after the method preset is applied.
double resolved_omega_aux(const RunConfig& cfg);

struct RunResult {
    AudioSignal output;
    nlohmann::json report;
};

// End-to-end reconstruction of the gap in `excerpt` with the configured
// method. The excerpt's own gap-region content is discarded by the mask
// and serves as the metric reference. Corpus signals are required for the
// sim and simdps methods.
RunResult run_inpaint(const RunConfig& cfg, const AudioSignal& excerpt,
                      const std::vector<AudioSignal>& corpus);

// Retrieval only: returns the extracted guide and a report with the
// candidate summary.
RunResult run_search(const RunConfig& cfg, const AudioSignal& excerpt,
                     const std::vector<AudioSignal>& corpus);

// Synthesizes a deterministic toy track, masks an excerpt, runs every
// method, and writes audio plus reports into out_dir. Returns the summary
// report.
nlohmann::json run_demo(const RunConfig& cfg, const std::string& out_dir);

// Diagnostics for a denoiser source: consistency identities for the
// analytic ones, protocol checks for external ones.
nlohmann::json denoise_check(const RunConfig& cfg);

nlohmann::json metrics_to_json(const GapMetrics& m);

// Deterministic synthetic piano-like pattern used by the demo.
AudioSignal synth_demo_track(double sample_rate, double seconds, std::uint64_t seed);

GapMask gap_mask_from_config(const RunConfig& cfg, std::size_t n);

} // namespace simdps
