#include "dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "errors.hpp"
#include "fft.hpp"

namespace simdps {

namespace {

constexpr int kTapsPerPhase = 64;
constexpr int kKernelHalfWidth = kTapsPerPhase / 2;
constexpr double kKaiserBeta = 8.0;
constexpr std::size_t kMaxPolyphasePhases = 512;
constexpr double kChromaMinFreqHz = 55.0;

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum)
            break;
    }
    return sum;
}

double sinc(double u) {
    if (std::abs(u) < 1e-12)
        return 1.0;
    const double pu = M_PI * u;
    return std::sin(pu) / pu;
}

// Windowed-sinc interpolation kernel at offset t (input-sample units).
// cutoff is the lowpass cutoff as a fraction of the source Nyquist.
double resample_kernel(double t, double cutoff) {
    if (std::abs(t) > kKernelHalfWidth)
        return 0.0;
    const double u = t / kKernelHalfWidth;
    const double kaiser = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) /
                          bessel_i0(kKaiserBeta);
    return cutoff * sinc(cutoff * t) * kaiser;
}

bool nearly_integral(double v) {
    return std::abs(v - std::llround(v)) < 1e-9;
}

// One output sample: dot product of the kernel phase at fractional
// position (base + frac) with the zero-padded input.
double convolve_at(const std::vector<double>& x, long long base, const double* coeffs,
                   double coeff_sum) {
    double acc = 0.0;
    for (int k = -kKernelHalfWidth; k <= kKernelHalfWidth; ++k) {
        const long long idx = base + k;
        if (idx < 0 || idx >= static_cast<long long>(x.size()))
            continue;
        acc += x[static_cast<std::size_t>(idx)] * coeffs[k + kKernelHalfWidth];
    }
    return acc / coeff_sum;
}

} // namespace

AudioSignal resample(const AudioSignal& x, double target_rate) {
    if (!(target_rate > 0.0))
        raise(errc::invalid_argument, "target sample rate must be positive");
    if (target_rate == x.sample_rate)
        return x;

    const double src = x.sample_rate;
    const double dst = target_rate;
    const std::size_t out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(x.size()) * dst / src));
    if (out_len == 0)
        raise(errc::invalid_argument, "resampled signal would be empty");

    const double cutoff = std::min(1.0, dst / src);
    std::vector<double> out(out_len);

    // Exact rational phase grid when both rates are integral and the
    // upsampling factor stays small enough to tabulate.
    if (nearly_integral(src) && nearly_integral(dst)) {
        const long long isrc = std::llround(src);
        const long long idst = std::llround(dst);
        const long long g = std::gcd(isrc, idst);
        const long long up = idst / g;    // phases
        const long long down = isrc / g;  // input step per phase wrap
        if (static_cast<std::size_t>(up) <= kMaxPolyphasePhases) {
            const int taps = 2 * kKernelHalfWidth + 1;
            std::vector<double> table(static_cast<std::size_t>(up) * taps);
            std::vector<double> sums(static_cast<std::size_t>(up));
            for (long long p = 0; p < up; ++p) {
                const double frac = static_cast<double>(p) / static_cast<double>(up);
                double s = 0.0;
                for (int k = -kKernelHalfWidth; k <= kKernelHalfWidth; ++k) {
                    const double c = resample_kernel(static_cast<double>(k) - frac, cutoff);
                    table[p * taps + (k + kKernelHalfWidth)] = c;
                    s += c;
                }
                sums[static_cast<std::size_t>(p)] = s;
            }
            for (std::size_t j = 0; j < out_len; ++j) {
                const long long num = static_cast<long long>(j) * down;
                const long long base = num / up;
                const long long phase = num % up;
                out[j] = convolve_at(x.samples, base, &table[phase * taps],
                                     sums[static_cast<std::size_t>(phase)]);
            }
            return AudioSignal{std::move(out), dst};
        }
    }

    // General path: evaluate the kernel directly at each output position.
    const int taps = 2 * kKernelHalfWidth + 1;
    std::vector<double> coeffs(taps);
    for (std::size_t j = 0; j < out_len; ++j) {
        const double pos = static_cast<double>(j) * src / dst;
        const double base_d = std::floor(pos);
        const double frac = pos - base_d;
        double s = 0.0;
        for (int k = -kKernelHalfWidth; k <= kKernelHalfWidth; ++k) {
            const double c = resample_kernel(static_cast<double>(k) - frac, cutoff);
            coeffs[k + kKernelHalfWidth] = c;
            s += c;
        }
        out[j] = convolve_at(x.samples, static_cast<long long>(base_d), coeffs.data(), s);
    }
    return AudioSignal{std::move(out), dst};
}

void validate_stft_config(const StftConfig& cfg) {
    if (cfg.window_len == 0 || cfg.fft_size == 0 || cfg.hop == 0)
        raise(errc::invalid_argument, "STFT window, FFT size and hop must all be positive");
    if (cfg.hop > cfg.window_len || cfg.window_len > cfg.fft_size)
        raise(errc::invalid_argument, "STFT config must satisfy hop <= window_len <= fft_size");
    if (!is_power_of_two(cfg.fft_size))
        raise(errc::invalid_argument, "FFT size must be a power of two");
}

std::size_t stft_frame_count(std::size_t len, const StftConfig& cfg) {
    if (len < cfg.window_len)
        return 0;
    return 1 + (len - cfg.window_len) / cfg.hop;
}

FeatureMatrix stft_magnitude(const AudioSignal& x, const StftConfig& cfg) {
    validate_stft_config(cfg);
    if (x.size() < cfg.window_len)
        raise(errc::invalid_argument, "signal shorter than one STFT window");

    const std::size_t frames = stft_frame_count(x.size(), cfg);
    const std::size_t bins = cfg.fft_size / 2 + 1;

    // Periodic Hann.
    std::vector<double> window(cfg.window_len);
    for (std::size_t i = 0; i < cfg.window_len; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                          static_cast<double>(cfg.window_len)));

    FeatureMatrix out;
    out.frame_count = frames;
    out.bin_count = bins;
    out.frame_rate = x.sample_rate / static_cast<double>(cfg.hop);
    out.data.resize(frames * bins);

    std::vector<double> frame(cfg.window_len);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t off = t * cfg.hop;
        for (std::size_t i = 0; i < cfg.window_len; ++i)
            frame[i] = x.samples[off + i] * window[i];
        const std::vector<double> mag = real_fft_magnitude(frame, cfg.fft_size);
        std::copy(mag.begin(), mag.end(), out.frame(t));
    }
    return out;
}

FeatureMatrix chromagram(const FeatureMatrix& stft, double sample_rate, const StftConfig& cfg,
                         double tuning_ref) {
    if (stft.bin_count != cfg.fft_size / 2 + 1)
        raise(errc::shape_mismatch, "feature matrix is not an STFT magnitude matrix for this config");
    if (!(tuning_ref > 0.0))
        raise(errc::invalid_argument, "tuning reference must be positive");

    // Pitch class per STFT bin, -1 for excluded bins.
    std::vector<int> bin_class(stft.bin_count, -1);
    for (std::size_t k = 0; k < stft.bin_count; ++k) {
        const double freq = static_cast<double>(k) * sample_rate / static_cast<double>(cfg.fft_size);
        if (freq < kChromaMinFreqHz)
            continue;
        const long long midi = std::llround(12.0 * std::log2(freq / tuning_ref)) + 69;
        bin_class[k] = static_cast<int>(((midi % 12) + 12) % 12);
    }

    FeatureMatrix out;
    out.frame_count = stft.frame_count;
    out.bin_count = 12;
    out.frame_rate = stft.frame_rate;
    out.data.assign(stft.frame_count * 12, 0.0);

    for (std::size_t t = 0; t < stft.frame_count; ++t) {
        const double* in = stft.frame(t);
        double* row = out.frame(t);
        for (std::size_t k = 0; k < stft.bin_count; ++k) {
            if (bin_class[k] < 0)
                continue;
            row[bin_class[k]] += in[k] * in[k];
        }
        double norm = 0.0;
        for (int c = 0; c < 12; ++c)
            norm += row[c] * row[c];
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (int c = 0; c < 12; ++c)
                row[c] /= norm;
        }
    }
    return out;
}

AudioSignal crossfade_splice(const AudioSignal& a, const AudioSignal& b, std::size_t boundary,
                             double fade_ms) {
    if (a.size() != b.size() || a.sample_rate != b.sample_rate)
        raise(errc::shape_mismatch, "crossfade inputs must share length and sample rate");
    if (boundary > a.size())
        raise(errc::invalid_argument, "splice boundary outside signal");
    if (fade_ms < 0.0)
        raise(errc::invalid_argument, "fade length must be >= 0");

    const std::size_t n = a.size();
    const std::size_t width =
        static_cast<std::size_t>(std::llround(fade_ms / 1000.0 * a.sample_rate));

    std::vector<double> out(n);
    if (width == 0) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = i < boundary ? a.samples[i] : b.samples[i];
        return AudioSignal{std::move(out), a.sample_rate};
    }

    const std::size_t half = width / 2;
    if (boundary < half || boundary - half + width > n)
        raise(errc::invalid_argument, "fade window exceeds signal bounds");
    const std::size_t start = boundary - half;

    for (std::size_t i = 0; i < start; ++i)
        out[i] = a.samples[i];
    for (std::size_t i = 0; i < width; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(width);
        const double gb = 0.5 * (1.0 - std::cos(M_PI * u));
        // delta form: identical inputs mix to themselves exactly
        out[start + i] = a.samples[start + i] + gb * (b.samples[start + i] - a.samples[start + i]);
    }
    for (std::size_t i = start + width; i < n; ++i)
        out[i] = b.samples[i];
    return AudioSignal{std::move(out), a.sample_rate};
}

} // namespace simdps
