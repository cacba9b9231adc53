#pragma once

#include <stdexcept>
#include <string>

namespace simdps {

// Error categories; the C API maps these onto its status codes and the
// CLI onto process exit codes.
enum class errc {
    invalid_argument,  // bad parameter or config value
    shape_mismatch,    // length/rate disagreement between operands
    data,              // malformed or unusable input data (files, corpora)
    numeric,           // non-finite values where finite ones are required
    capability,        // operation not supported by this backend
    protocol,          // external-denoiser wire protocol violation
    timeout,           // external denoiser did not answer in time
    io,                // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace simdps
