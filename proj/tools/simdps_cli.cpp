// Command-line front end. Links the shared library through its C API only.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simdps.h"

namespace {

using nlohmann::json;

struct SignalDeleter {
    void operator()(sdps_signal* s) const { sdps_signal_free(s); }
};
using SignalPtr = std::unique_ptr<sdps_signal, SignalDeleter>;

struct StringDeleter {
    void operator()(char* s) const { sdps_string_free(s); }
};
using CStr = std::unique_ptr<char, StringDeleter>;

[[noreturn]] void fail(int status) {
    std::cerr << "error: " << sdps_last_error() << "\n";
    std::exit(status == SDPS_OK ? 4 : status);
}

SignalPtr load_signal(const std::string& path) {
    sdps_signal* raw = nullptr;
    const int rc = sdps_signal_load_wav(path.c_str(), &raw);
    if (rc != SDPS_OK)
        fail(rc);
    return SignalPtr(raw);
}

void save_signal(const sdps_signal* sig, const std::string& path, const std::string& format) {
    const int rc = sdps_signal_save_wav(sig, path.c_str(), format.c_str());
    if (rc != SDPS_OK)
        fail(rc);
}

json load_config_file(const std::string& path) {
    if (path.empty())
        return json::object();
    std::ifstream f(path);
    if (!f) {
        std::cerr << "error: cannot open config file " << path << "\n";
        std::exit(SDPS_EUSAGE);
    }
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) {
        std::cerr << "error: " << path << " is not valid JSON\n";
        std::exit(SDPS_EUSAGE);
    }
    // A saved report works as a config: its echo is under "config".
    if (j.contains("config") && j["config"].is_object())
        return j["config"];
    return j;
}

// Apply "dotted.path=value" overrides; values parse as JSON when possible,
// otherwise as strings.
void apply_overrides(json& cfg, const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << s << "'\n";
            std::exit(SDPS_EUSAGE);
        }
        const std::string path = s.substr(0, eq);
        const std::string raw = s.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded())
            value = raw;

        json* node = &cfg;
        std::size_t pos = 0;
        while (true) {
            const std::size_t dot = path.find('.', pos);
            const std::string key = path.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                (*node)[key] = value;
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        std::cerr << "error: cannot write " << path << "\n";
        std::exit(SDPS_EDATA);
    }
    f << text;
    if (!text.empty() && text.back() != '\n')
        f << "\n";
}

struct CommonRunArgs {
    std::string config_path;
    std::string input_path;
    std::vector<std::string> corpus_paths;
    double excerpt_start_s = -1.0; // >= 0: input is a whole track
    std::string output_path;
    std::string report_path;
    std::vector<std::string> sets;
    long long seed = -1;
    std::string method;
    std::string denoiser;
};

void add_common(CLI::App* cmd, CommonRunArgs& a, bool with_method) {
    cmd->add_option("--config", a.config_path, "JSON config file (or saved report)");
    cmd->add_option("--input", a.input_path, "input WAV (excerpt, or track with --excerpt-start-s)")
        ->required();
    cmd->add_option("--corpus", a.corpus_paths, "additional corpus WAV files");
    cmd->add_option("--excerpt-start-s", a.excerpt_start_s,
                    "cut the excerpt here and use the track remainder as corpus");
    cmd->add_option("--output", a.output_path, "output WAV path")->required();
    cmd->add_option("--report", a.report_path, "write the run report JSON here");
    cmd->add_option("--set", a.sets, "config override, dotted.path=value (repeatable)");
    cmd->add_option("--seed", a.seed, "override config seed");
    if (with_method)
        cmd->add_option("--method", a.method, "dps | simdps-l | simdps-h | sim | lpc");
    cmd->add_option("--denoiser", a.denoiser,
                    "gaussian-demo | gmm-demo | stdio:<cmd> | tcp:<host>:<port>");
}

json assemble_config(const CommonRunArgs& a) {
    json cfg = load_config_file(a.config_path);
    if (a.seed >= 0)
        cfg["seed"] = static_cast<std::uint64_t>(a.seed);
    if (!a.method.empty())
        cfg["method"] = a.method;
    if (!a.denoiser.empty())
        cfg["denoiser"] = a.denoiser;
    apply_overrides(cfg, a.sets);
    return cfg;
}

// Loads the excerpt and corpus, cutting the track when requested.
void prepare_inputs(const CommonRunArgs& a, const json& cfg, SignalPtr& excerpt,
                    std::vector<SignalPtr>& corpus) {
    SignalPtr input = load_signal(a.input_path);
    if (a.excerpt_start_s >= 0.0) {
        const double rate = sdps_signal_rate(input.get());
        const double excerpt_seconds = cfg.value("excerpt_seconds", 6.0);
        const auto start = static_cast<uint64_t>(a.excerpt_start_s * rate + 0.5);
        const auto len = static_cast<uint64_t>(excerpt_seconds * rate + 0.5);
        sdps_signal* cut = nullptr;
        int rc = sdps_signal_slice(input.get(), start, len, &cut);
        if (rc != SDPS_OK)
            fail(rc);
        excerpt.reset(cut);

        sdps_signal* parts[2] = {nullptr, nullptr};
        uint64_t count = 0;
        rc = sdps_build_corpus(input.get(), start, len, parts, &count);
        if (rc != SDPS_OK)
            fail(rc);
        for (uint64_t i = 0; i < count; ++i)
            corpus.emplace_back(parts[i]);
    } else {
        excerpt = std::move(input);
    }
    for (const std::string& p : a.corpus_paths)
        corpus.push_back(load_signal(p));
}

json finalize_report(const char* report_json, const CommonRunArgs& a) {
    json report = json::parse(report_json);
    report["inputs"] = {{"input", a.input_path},
                        {"corpus", a.corpus_paths},
                        {"excerpt_start_s", a.excerpt_start_s},
                        {"output", a.output_path}};
    return report;
}

int cmd_inpaint(const CommonRunArgs& a) {
    const json cfg = assemble_config(a);
    SignalPtr excerpt;
    std::vector<SignalPtr> corpus;
    prepare_inputs(a, cfg, excerpt, corpus);

    std::vector<const sdps_signal*> corpus_raw;
    for (const auto& c : corpus)
        corpus_raw.push_back(c.get());

    sdps_signal* out = nullptr;
    char* report_raw = nullptr;
    const int rc = sdps_run_inpaint(cfg.dump().c_str(), excerpt.get(), corpus_raw.data(),
                                    corpus_raw.size(), &out, &report_raw);
    if (rc != SDPS_OK)
        fail(rc);
    SignalPtr out_sig(out);
    CStr report_str(report_raw);

    save_signal(out_sig.get(), a.output_path, "float32");
    const json report = finalize_report(report_str.get(), a);
    if (!a.report_path.empty())
        write_text(a.report_path, report.dump(2));
    std::cout << report["metrics_vs_input"].dump(2) << "\n";
    return 0;
}

int cmd_search(const CommonRunArgs& a) {
    const json cfg = assemble_config(a);
    SignalPtr excerpt;
    std::vector<SignalPtr> corpus;
    prepare_inputs(a, cfg, excerpt, corpus);

    std::vector<const sdps_signal*> corpus_raw;
    for (const auto& c : corpus)
        corpus_raw.push_back(c.get());

    sdps_signal* guide = nullptr;
    char* report_raw = nullptr;
    const int rc = sdps_run_search(cfg.dump().c_str(), excerpt.get(), corpus_raw.data(),
                                   corpus_raw.size(), &guide, &report_raw);
    if (rc != SDPS_OK)
        fail(rc);
    SignalPtr guide_sig(guide);
    CStr report_str(report_raw);

    save_signal(guide_sig.get(), a.output_path, "float32");
    const json report = finalize_report(report_str.get(), a);
    if (!a.report_path.empty())
        write_text(a.report_path, report.dump(2));
    std::cout << report["candidate"].dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simdps: similarity-guided diffusion inpainting for long audio gaps"};
    app.require_subcommand(1);

    CommonRunArgs inpaint_args, search_args;
    CLI::App* inpaint = app.add_subcommand("inpaint", "reconstruct the gap of an excerpt");
    add_common(inpaint, inpaint_args, true);
    CLI::App* search = app.add_subcommand("search", "retrieval only: emit the guide segment");
    add_common(search, search_args, false);

    std::string check_denoiser = "gaussian-demo";
    std::string check_report_path;
    long long check_seed = 0;
    int check_timeout = 10000;
    CLI::App* check = app.add_subcommand("denoise-check", "denoiser consistency diagnostics");
    check->add_option("--denoiser", check_denoiser,
                      "gaussian-demo | gmm-demo | stdio:<cmd> | tcp:<host>:<port>");
    check->add_option("--report", check_report_path, "write the check report JSON here");
    check->add_option("--seed", check_seed, "probe seed");
    check->add_option("--timeout-ms", check_timeout, "external denoiser timeout");

    std::string eval_recon, eval_ref, eval_report_path;
    double eval_gap_start = 2.0, eval_gap_dur = 2.0;
    CLI::App* evaluate = app.add_subcommand("evaluate", "gap metrics against a reference");
    evaluate->add_option("--reconstruction", eval_recon, "reconstructed WAV")->required();
    evaluate->add_option("--reference", eval_ref, "reference WAV")->required();
    evaluate->add_option("--gap-start-s", eval_gap_start, "gap start (seconds)");
    evaluate->add_option("--gap-duration-s", eval_gap_dur, "gap duration (seconds)");
    evaluate->add_option("--report", eval_report_path, "write metrics JSON here");

    std::string demo_dir = "demo_out";
    std::string demo_config;
    long long demo_seed = -1;
    std::vector<std::string> demo_sets;
    CLI::App* demo = app.add_subcommand("demo", "synthesize a toy corpus and run all methods");
    demo->add_option("--out-dir", demo_dir, "output directory");
    demo->add_option("--config", demo_config, "JSON config file");
    demo->add_option("--seed", demo_seed, "override config seed");
    demo->add_option("--set", demo_sets, "config override, dotted.path=value");

    CLI11_PARSE(app, argc, argv);

    if (*inpaint)
        return cmd_inpaint(inpaint_args);
    if (*search)
        return cmd_search(search_args);

    if (*check) {
        json cfg = json::object();
        cfg["denoiser"] = check_denoiser;
        cfg["seed"] = static_cast<std::uint64_t>(check_seed);
        cfg["denoiser_timeout_ms"] = check_timeout;
        char* report_raw = nullptr;
        const int rc = sdps_denoise_check(cfg.dump().c_str(), &report_raw);
        CStr report(report_raw);
        if (report) {
            std::cout << report.get() << "\n";
            if (!check_report_path.empty())
                write_text(check_report_path, report.get());
        }
        if (rc != SDPS_OK) {
            std::cerr << "error: " << sdps_last_error() << "\n";
            return rc;
        }
        return 0;
    }

    if (*evaluate) {
        SignalPtr recon = load_signal(eval_recon);
        SignalPtr ref = load_signal(eval_ref);
        const double rate = sdps_signal_rate(recon.get());
        const auto gap_start = static_cast<uint64_t>(eval_gap_start * rate + 0.5);
        const auto gap_len = static_cast<uint64_t>(eval_gap_dur * rate + 0.5);
        if (gap_len == 0) {
            std::cerr << "error: empty gap\n";
            return SDPS_EUSAGE;
        }
        char* metrics_raw = nullptr;
        const int rc = sdps_evaluate(recon.get(), ref.get(), gap_start, gap_start + gap_len - 1,
                                     &metrics_raw);
        if (rc != SDPS_OK)
            fail(rc);
        CStr metrics(metrics_raw);
        std::cout << metrics.get() << "\n";
        if (!eval_report_path.empty())
            write_text(eval_report_path, metrics.get());
        return 0;
    }

    if (*demo) {
        json cfg = load_config_file(demo_config);
        if (demo_seed >= 0)
            cfg["seed"] = static_cast<std::uint64_t>(demo_seed);
        apply_overrides(cfg, demo_sets);
        char* report_raw = nullptr;
        const int rc = sdps_run_demo(cfg.dump().c_str(), demo_dir.c_str(), &report_raw);
        if (rc != SDPS_OK)
            fail(rc);
        CStr report(report_raw);
        std::cout << report.get() << "\n";
        return 0;
    }

    return SDPS_EUSAGE;
}
