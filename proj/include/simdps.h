/* simdps: similarity-guided diffusion inpainting for audio gaps.
 *
 * C interface of the shared library. Handles are opaque; every fallible
 * call returns a status code and leaves a human-readable message in
 * sdps_last_error() (thread-local). Strings returned through out-params
 * are heap-allocated and must be released with sdps_string_free().
 */

#ifndef SIMDPS_H
#define SIMDPS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct sdps_signal sdps_signal;

enum sdps_status {
    SDPS_OK = 0,
    SDPS_EUSAGE = 1,    /* bad arguments or configuration */
    SDPS_EDATA = 2,     /* unusable input data */
    SDPS_EDENOISER = 3, /* external denoiser transport failure */
    SDPS_EINTERNAL = 4,
};

const char* sdps_version(void);
const char* sdps_last_error(void);
void sdps_string_free(char* s);

/* ---- signals ---- */

int sdps_signal_from_samples(const double* samples, uint64_t count, double sample_rate,
                             sdps_signal** out);
int sdps_signal_load_wav(const char* path, sdps_signal** out);
/* format: "pcm16" or "float32" */
int sdps_signal_save_wav(const sdps_signal* sig, const char* path, const char* format);
uint64_t sdps_signal_length(const sdps_signal* sig);
double sdps_signal_rate(const sdps_signal* sig);
int sdps_signal_copy_samples(const sdps_signal* sig, double* dst, uint64_t capacity);
int sdps_signal_slice(const sdps_signal* sig, uint64_t start, uint64_t length,
                      sdps_signal** out);
void sdps_signal_free(sdps_signal* sig);

/* Within-track corpus split: the track before and after the excerpt.
 * out must hold 2 slots; *count receives how many were produced. */
int sdps_build_corpus(const sdps_signal* track, uint64_t excerpt_start, uint64_t excerpt_len,
                      sdps_signal* out[2], uint64_t* count);

/* ---- runs ----
 * config_json is the documented run-configuration object ("{}" for all
 * defaults); reports come back as JSON strings. */

int sdps_run_inpaint(const char* config_json, const sdps_signal* excerpt,
                     const sdps_signal* const* corpus, uint64_t corpus_count,
                     sdps_signal** out_audio, char** out_report_json);

int sdps_run_search(const char* config_json, const sdps_signal* excerpt,
                    const sdps_signal* const* corpus, uint64_t corpus_count,
                    sdps_signal** out_guide, char** out_report_json);

int sdps_run_demo(const char* config_json, const char* out_dir, char** out_report_json);

int sdps_denoise_check(const char* config_json, char** out_report_json);

/* Gap metrics of a reconstruction against a reference; gap bounds are
 * inclusive sample indices. */
int sdps_evaluate(const sdps_signal* reconstruction, const sdps_signal* reference,
                  uint64_t gap_start, uint64_t gap_end, char** out_metrics_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SIMDPS_H */
