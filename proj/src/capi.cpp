#include "simdps.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "core/baselines.hpp"
#include "core/errors.hpp"
#include "core/runner.hpp"
#include "core/signal.hpp"
#include "core/simsearch.hpp"
#include "core/wavio.hpp"

using simdps::AudioSignal;

struct sdps_signal {
    AudioSignal sig;
};

namespace {

thread_local std::string g_last_error;

int map_error(const simdps::Error& e) {
    g_last_error = e.what();
    switch (e.code()) {
    case simdps::errc::invalid_argument:
    case simdps::errc::capability:
        return SDPS_EUSAGE;
    case simdps::errc::data:
    case simdps::errc::shape_mismatch:
    case simdps::errc::numeric:
    case simdps::errc::io:
        return SDPS_EDATA;
    case simdps::errc::protocol:
    case simdps::errc::timeout:
        return SDPS_EDENOISER;
    }
    return SDPS_EINTERNAL;
}

template <typename Fn> int guarded(Fn&& fn) {
    try {
        fn();
        return SDPS_OK;
    } catch (const simdps::Error& e) {
        return map_error(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SDPS_EINTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SDPS_EINTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

simdps::RunConfig parse_config(const char* config_json) {
    if (!config_json)
        simdps::raise(simdps::errc::invalid_argument, "config JSON must not be null");
    nlohmann::json j = nlohmann::json::parse(config_json, nullptr, false);
    if (j.is_discarded())
        simdps::raise(simdps::errc::invalid_argument, "config is not valid JSON");
    if (!j.is_object())
        simdps::raise(simdps::errc::invalid_argument, "config must be a JSON object");
    return simdps::config_from_json(j);
}

std::vector<AudioSignal> collect_corpus(const sdps_signal* const* corpus, uint64_t count) {
    std::vector<AudioSignal> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        if (!corpus || !corpus[i])
            simdps::raise(simdps::errc::invalid_argument, "null corpus signal handle");
        out.push_back(corpus[i]->sig);
    }
    return out;
}

void require(bool cond, const char* msg) {
    if (!cond)
        simdps::raise(simdps::errc::invalid_argument, msg);
}

} // namespace

extern "C" {

const char* sdps_version(void) { return "0.1.0"; }

const char* sdps_last_error(void) { return g_last_error.c_str(); }

void sdps_string_free(char* s) { ::free(s); }

int sdps_signal_from_samples(const double* samples, uint64_t count, double sample_rate,
                             sdps_signal** out) {
    return guarded([&] {
        require(samples && out, "null argument");
        std::vector<double> v(samples, samples + count);
        *out = new sdps_signal{simdps::make_signal(std::move(v), sample_rate)};
    });
}

int sdps_signal_load_wav(const char* path, sdps_signal** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new sdps_signal{simdps::load_wav(path)};
    });
}

int sdps_signal_save_wav(const sdps_signal* sig, const char* path, const char* format) {
    return guarded([&] {
        require(sig && path && format, "null argument");
        simdps::WavFormat f;
        if (std::strcmp(format, "pcm16") == 0)
            f = simdps::WavFormat::pcm16;
        else if (std::strcmp(format, "float32") == 0)
            f = simdps::WavFormat::float32;
        else
            simdps::raise(simdps::errc::invalid_argument, "format must be pcm16 or float32");
        simdps::save_wav(sig->sig, path, f);
    });
}

uint64_t sdps_signal_length(const sdps_signal* sig) { return sig ? sig->sig.size() : 0; }

double sdps_signal_rate(const sdps_signal* sig) { return sig ? sig->sig.sample_rate : 0.0; }

int sdps_signal_copy_samples(const sdps_signal* sig, double* dst, uint64_t capacity) {
    return guarded([&] {
        require(sig && dst, "null argument");
        require(capacity >= sig->sig.size(), "destination buffer too small");
        std::memcpy(dst, sig->sig.samples.data(), sig->sig.size() * sizeof(double));
    });
}

int sdps_signal_slice(const sdps_signal* sig, uint64_t start, uint64_t length,
                      sdps_signal** out) {
    return guarded([&] {
        require(sig && out, "null argument");
        require(start + length <= sig->sig.size(), "slice outside signal");
        std::vector<double> v(sig->sig.samples.begin() + static_cast<long>(start),
                              sig->sig.samples.begin() + static_cast<long>(start + length));
        *out = new sdps_signal{simdps::make_signal(std::move(v), sig->sig.sample_rate)};
    });
}

void sdps_signal_free(sdps_signal* sig) { delete sig; }

int sdps_build_corpus(const sdps_signal* track, uint64_t excerpt_start, uint64_t excerpt_len,
                      sdps_signal* out[2], uint64_t* count) {
    return guarded([&] {
        require(track && out && count, "null argument");
        std::vector<AudioSignal> corpus =
            simdps::build_corpus(track->sig, excerpt_start, excerpt_len);
        *count = corpus.size();
        for (std::size_t i = 0; i < corpus.size(); ++i)
            out[i] = new sdps_signal{std::move(corpus[i])};
    });
}

int sdps_run_inpaint(const char* config_json, const sdps_signal* excerpt,
                     const sdps_signal* const* corpus, uint64_t corpus_count,
                     sdps_signal** out_audio, char** out_report_json) {
    return guarded([&] {
        require(excerpt && out_audio && out_report_json, "null argument");
        const simdps::RunConfig cfg = parse_config(config_json);
        simdps::RunResult res =
            simdps::run_inpaint(cfg, excerpt->sig, collect_corpus(corpus, corpus_count));
        *out_audio = new sdps_signal{std::move(res.output)};
        *out_report_json = dup_string(res.report.dump(2));
    });
}

int sdps_run_search(const char* config_json, const sdps_signal* excerpt,
                    const sdps_signal* const* corpus, uint64_t corpus_count,
                    sdps_signal** out_guide, char** out_report_json) {
    return guarded([&] {
        require(excerpt && out_guide && out_report_json, "null argument");
        const simdps::RunConfig cfg = parse_config(config_json);
        simdps::RunResult res =
            simdps::run_search(cfg, excerpt->sig, collect_corpus(corpus, corpus_count));
        *out_guide = new sdps_signal{std::move(res.output)};
        *out_report_json = dup_string(res.report.dump(2));
    });
}

int sdps_run_demo(const char* config_json, const char* out_dir, char** out_report_json) {
    return guarded([&] {
        require(out_dir && out_report_json, "null argument");
        const simdps::RunConfig cfg = parse_config(config_json);
        const nlohmann::json report = simdps::run_demo(cfg, out_dir);
        *out_report_json = dup_string(report.dump(2));
    });
}

int sdps_denoise_check(const char* config_json, char** out_report_json) {
    return guarded([&] {
        require(out_report_json, "null argument");
        const simdps::RunConfig cfg = parse_config(config_json);
        const nlohmann::json report = simdps::denoise_check(cfg);
        *out_report_json = dup_string(report.dump(2));
        if (!report["ok"].get<bool>())
            simdps::raise(simdps::errc::protocol, "denoiser checks failed");
    });
}

int sdps_evaluate(const sdps_signal* reconstruction, const sdps_signal* reference,
                  uint64_t gap_start, uint64_t gap_end, char** out_metrics_json) {
    return guarded([&] {
        require(reconstruction && reference && out_metrics_json, "null argument");
        const simdps::GapMask mask = simdps::mask_from_interval(
            reconstruction->sig.size(), gap_start, gap_end);
        const simdps::GapMetrics m =
            simdps::gap_metrics(reconstruction->sig, reference->sig, mask);
        *out_metrics_json = dup_string(simdps::metrics_to_json(m).dump(2));
    });
}

} // extern "C"
