#include "wavio.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "errors.hpp"

namespace simdps {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

float read_f32(const unsigned char* p) {
    const std::uint32_t bits = read_u32(p);
    return std::bit_cast<float>(bits);
}

void append_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

void append_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void append_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

} // namespace

AudioSignal load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(errc::io, "cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        raise(errc::data, path + ": not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data_ptr = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        char tag[5] = {0};
        std::memcpy(tag, bytes.data() + pos, 4);
        const std::uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + chunk_len > bytes.size())
            raise(errc::data, path + ": truncated '" + tag + "' chunk");
        const unsigned char* chunk = bytes.data() + pos;

        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_len < 16)
                raise(errc::data, path + ": malformed 'fmt ' chunk");
            format = read_u16(chunk);
            channels = read_u16(chunk + 2);
            rate = read_u32(chunk + 4);
            bits = read_u16(chunk + 14);
            if (format == kFormatExtensible) {
                if (chunk_len < 40)
                    raise(errc::data, path + ": malformed extensible 'fmt ' chunk");
                format = read_u16(chunk + 24); // first two bytes of SubFormat GUID
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data_ptr = chunk;
            data_len = chunk_len;
        }
        pos += chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt)
        raise(errc::data, path + ": missing 'fmt ' chunk");
    if (!data_ptr)
        raise(errc::data, path + ": missing 'data' chunk");
    if (channels == 0 || rate == 0)
        raise(errc::data, path + ": malformed 'fmt ' chunk");

    std::size_t bytes_per_sample = 0;
    if (format == kFormatPcm && bits == 16)
        bytes_per_sample = 2;
    else if (format == kFormatPcm && bits == 24)
        bytes_per_sample = 3;
    else if (format == kFormatFloat && bits == 32)
        bytes_per_sample = 4;
    else
        raise(errc::data, path + ": unsupported codec in 'fmt ' chunk (format " +
                              std::to_string(format) + ", " + std::to_string(bits) + " bits)");

    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = data_len / frame_bytes;
    if (frames == 0)
        raise(errc::data, path + ": empty 'data' chunk");

    std::vector<double> mono(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data_ptr + f * frame_bytes + c * bytes_per_sample;
            double v = 0.0;
            if (bytes_per_sample == 2) {
                const std::int16_t s = static_cast<std::int16_t>(read_u16(p));
                v = static_cast<double>(s) / 32768.0;
            } else if (bytes_per_sample == 3) {
                std::int32_t s = static_cast<std::int32_t>(p[0]) |
                                 (static_cast<std::int32_t>(p[1]) << 8) |
                                 (static_cast<std::int32_t>(p[2]) << 16);
                if (s & 0x800000)
                    s |= ~0xFFFFFF; // sign-extend
                v = static_cast<double>(s) / 8388608.0;
            } else {
                v = static_cast<double>(read_f32(p));
            }
            acc += v;
        }
        mono[f] = acc / static_cast<double>(channels);
    }
    return make_signal(std::move(mono), static_cast<double>(rate));
}

void save_wav(const AudioSignal& signal, const std::string& path, WavFormat format) {
    if (signal.size() == 0)
        raise(errc::invalid_argument, "refusing to write an empty signal");
    for (double v : signal.samples)
        if (!std::isfinite(v))
            raise(errc::numeric, "refusing to write non-finite samples");
    if (!(signal.sample_rate > 0.0))
        raise(errc::invalid_argument, "invalid sample rate");

    const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(signal.sample_rate));
    const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
    const std::uint16_t block = bits / 8;
    const std::uint32_t data_len = static_cast<std::uint32_t>(signal.size()) * block;
    const bool is_float = format == WavFormat::float32;

    std::vector<unsigned char> out;
    out.reserve(64 + data_len);
    append_tag(out, "RIFF");
    const std::uint32_t fact_len = is_float ? 12 : 0;
    append_u32(out, 4 + (8 + 16) + fact_len + (8 + data_len));
    append_tag(out, "WAVE");

    append_tag(out, "fmt ");
    append_u32(out, 16);
    append_u16(out, is_float ? kFormatFloat : kFormatPcm);
    append_u16(out, 1); // mono
    append_u32(out, rate);
    append_u32(out, rate * block);
    append_u16(out, block);
    append_u16(out, bits);

    if (is_float) {
        append_tag(out, "fact");
        append_u32(out, 4);
        append_u32(out, static_cast<std::uint32_t>(signal.size()));
    }

    append_tag(out, "data");
    append_u32(out, data_len);
    for (double v : signal.samples) {
        if (format == WavFormat::pcm16) {
            double scaled = v * 32768.0;
            // round half away from zero
            scaled = scaled >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
            const long long clamped =
                std::min<long long>(32767, std::max<long long>(-32768, (long long)scaled));
            append_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(clamped)));
        } else {
            const float f = static_cast<float>(v);
            append_u32(out, std::bit_cast<std::uint32_t>(f));
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        raise(errc::io, "cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f)
        raise(errc::io, "failed writing " + path);
}

} // namespace simdps
