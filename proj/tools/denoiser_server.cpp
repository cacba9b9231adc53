// Reference external-denoiser server speaking the simdps wire protocol on
// stdin/stdout, or on a TCP socket with --tcp. Modes:
//   echo      return the input unchanged
//   gaussian  diagonal Gaussian posterior mean (--mean, --var)
//   hang      read requests, never answer (timeout testing)

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "core/extdenoiser.hpp"
#include "core/priors.hpp"

using namespace simdps;

namespace {

bool read_exact(int fd, unsigned char* buf, std::size_t len) {
    std::size_t done = 0;
    while (done < len) {
        const ssize_t r = ::read(fd, buf + done, len - done);
        if (r <= 0)
            return false;
        done += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_exact(int fd, const unsigned char* buf, std::size_t len) {
    std::size_t done = 0;
    while (done < len) {
        const ssize_t w = ::write(fd, buf + done, len - done);
        if (w <= 0)
            return false;
        done += static_cast<std::size_t>(w);
    }
    return true;
}

struct Options {
    std::string mode = "echo";
    double mean = 0.0;
    double var = 1.0;
    int tcp_port = -1; // -1: stdio
};

int serve(int in_fd, int out_fd, const Options& opt) {
    std::vector<unsigned char> header(wire::kRequestHeaderLen);
    while (read_exact(in_fd, header.data(), header.size())) {
        if (std::memcmp(header.data(), wire::kMagic, 4) != 0) {
            const unsigned char status = wire::bad_magic;
            write_exact(out_fd, &status, 1);
            return 1;
        }
        if (wire::get_u16(header.data() + 4) != wire::kVersion) {
            const unsigned char status = wire::bad_version;
            write_exact(out_fd, &status, 1);
            return 1;
        }
        const std::uint32_t n = wire::get_u32(header.data() + 6);
        const double sigma = wire::get_f64(header.data() + 10);
        if (n == 0 || n > (1u << 26)) {
            const unsigned char status = wire::bad_dimension;
            write_exact(out_fd, &status, 1);
            return 1;
        }

        std::vector<unsigned char> payload(4ull * n);
        if (!read_exact(in_fd, payload.data(), payload.size()))
            return 1;

        if (opt.mode == "hang")
            continue; // swallow the request, never answer

        std::vector<double> x(n);
        for (std::uint32_t i = 0; i < n; ++i)
            x[i] = static_cast<double>(wire::get_f32(payload.data() + 4ull * i));

        std::vector<double> y(n);
        if (opt.mode == "echo") {
            y = x;
        } else { // gaussian
            const GaussianPrior prior(std::vector<double>(n, opt.mean),
                                      std::vector<double>(n, opt.var));
            prior.denoise(x, sigma, y);
        }

        std::vector<unsigned char> resp(1 + 4ull * n);
        resp[0] = wire::ok;
        for (std::uint32_t i = 0; i < n; ++i)
            wire::put_f32(resp.data() + 1 + 4ull * i, static_cast<float>(y[i]));
        if (!write_exact(out_fd, resp.data(), resp.size()))
            return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&]() -> const char* {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "missing value for %s\n", a.c_str());
                std::exit(1);
            }
            return argv[++i];
        };
        if (a == "--mode")
            opt.mode = next();
        else if (a == "--mean")
            opt.mean = std::stod(next());
        else if (a == "--var")
            opt.var = std::stod(next());
        else if (a == "--tcp")
            opt.tcp_port = std::stoi(next());
        else {
            std::fprintf(stderr,
                         "usage: denoiser_server [--mode echo|gaussian|hang] [--mean M] "
                         "[--var V] [--tcp PORT]\n");
            return 1;
        }
    }
    if (opt.mode != "echo" && opt.mode != "gaussian" && opt.mode != "hang") {
        std::fprintf(stderr, "unknown mode '%s'\n", opt.mode.c_str());
        return 1;
    }

    if (opt.tcp_port < 0)
        return serve(STDIN_FILENO, STDOUT_FILENO, opt);

    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) {
        std::perror("socket");
        return 1;
    }
    const int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(opt.tcp_port));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        std::perror("bind");
        return 1;
    }
    if (::listen(listener, 1) != 0) {
        std::perror("listen");
        return 1;
    }
    socklen_t alen = sizeof(addr);
    ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &alen);
    // Announce the actual port (useful with --tcp 0) and accept one client.
    std::printf("LISTENING %d\n", ntohs(addr.sin_port));
    std::fflush(stdout);
    const int conn = ::accept(listener, nullptr, nullptr);
    if (conn < 0) {
        std::perror("accept");
        return 1;
    }
    const int rc = serve(conn, conn, opt);
    ::close(conn);
    ::close(listener);
    return rc;
}
