#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "priors.hpp"

namespace simdps {

// Wire protocol shared by the client and the reference servers.
// Request:  "SDPS" | u16 version LE | u32 n LE | f64 sigma LE | n x f32 LE
// Response: u8 status (0 = ok)      | n x f32 LE (only when status = 0)
namespace wire {

inline constexpr char kMagic[4] = {'S', 'D', 'P', 'S'};
inline constexpr std::uint16_t kVersion = 1;

enum Status : std::uint8_t {
    ok = 0,
    bad_magic = 1,
    bad_version = 2,
    bad_dimension = 3,
    internal_error = 4,
};

void put_u16(unsigned char* p, std::uint16_t v);
void put_u32(unsigned char* p, std::uint32_t v);
void put_f32(unsigned char* p, float v);
void put_f64(unsigned char* p, double v);
std::uint16_t get_u16(const unsigned char* p);
std::uint32_t get_u32(const unsigned char* p);
float get_f32(const unsigned char* p);
double get_f64(const unsigned char* p);

inline constexpr std::size_t kRequestHeaderLen = 4 + 2 + 4 + 8;

} // namespace wire

// Client side of the external-denoiser channel. URIs:
//   stdio:<command line>   spawn the command, speak over its stdin/stdout
//   tcp:<host>:<port>      connect to a listening server
// One instance owns one serial request/response session; it offers no
// Jacobian product, so guidance must use identity_jacobian mode with it.
class ExternalDenoiser final : public Denoiser {
public:
    static std::unique_ptr<ExternalDenoiser> connect(const std::string& uri,
                                                     int timeout_ms = 10000);
    ~ExternalDenoiser() override;

    ExternalDenoiser(const ExternalDenoiser&) = delete;
    ExternalDenoiser& operator=(const ExternalDenoiser&) = delete;

    void denoise(std::span<const double> x, double sigma, std::span<double> out) const override;
    bool has_vjp() const override { return false; }

private:
    ExternalDenoiser() = default;

    mutable int write_fd_ = -1;
    mutable int read_fd_ = -1;
    long child_pid_ = -1;
    int timeout_ms_ = 10000;
};

} // namespace simdps
