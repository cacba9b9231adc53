#pragma once

#include <string>

#include "signal.hpp"

namespace simdps {

enum class WavFormat { pcm16, float32 };

// Reads PCM 16/24-bit and 32-bit float RIFF/WAV. Multi-channel input is
// averaged to mono; integer samples scale to [-1, 1) by 1 / 2^(bits-1).
AudioSignal load_wav(const std::string& path);

// Writes mono RIFF/WAV. pcm16 clamps to [-1, 1) and rounds half away from
// zero; float32 stores the samples narrowed to single precision.
void save_wav(const AudioSignal& signal, const std::string& path, WavFormat format);

} // namespace simdps
