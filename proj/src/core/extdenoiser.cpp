#include "extdenoiser.hpp"

#include <bit>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "errors.hpp"

namespace simdps {

namespace wire {

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v & 0xFF);
    p[1] = static_cast<unsigned char>(v >> 8);
}
void put_u32(unsigned char* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}
void put_f32(unsigned char* p, float v) { put_u32(p, std::bit_cast<std::uint32_t>(v)); }
void put_f64(unsigned char* p, double v) {
    const std::uint64_t b = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        p[i] = static_cast<unsigned char>((b >> (8 * i)) & 0xFF);
}
std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }
double get_f64(const unsigned char* p) {
    std::uint64_t b = 0;
    for (int i = 7; i >= 0; --i)
        b = (b << 8) | p[i];
    return std::bit_cast<double>(b);
}

} // namespace wire

namespace {

// A dead peer turns writes into SIGPIPE; report it as an error instead.
void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void write_all(int fd, const unsigned char* data, std::size_t len, int timeout_ms) {
    std::size_t done = 0;
    while (done < len) {
        pollfd pfd{fd, POLLOUT, 0};
        const int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr == 0)
            raise(errc::timeout, "external denoiser did not accept the request in time");
        if (pr < 0)
            raise(errc::protocol, std::string("poll failed: ") + std::strerror(errno));
        const ssize_t w = ::write(fd, data + done, len - done);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            raise(errc::protocol,
                  std::string("external denoiser stream closed while writing: ") +
                      std::strerror(errno));
        }
        done += static_cast<std::size_t>(w);
    }
}

void read_all(int fd, unsigned char* data, std::size_t len, int timeout_ms) {
    std::size_t done = 0;
    while (done < len) {
        pollfd pfd{fd, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr == 0)
            raise(errc::timeout, "external denoiser did not answer in time");
        if (pr < 0)
            raise(errc::protocol, std::string("poll failed: ") + std::strerror(errno));
        const ssize_t r = ::read(fd, data + done, len - done);
        if (r < 0) {
            if (errno == EINTR)
                continue;
            raise(errc::protocol,
                  std::string("external denoiser read failed: ") + std::strerror(errno));
        }
        if (r == 0)
            raise(errc::protocol, "external denoiser closed the stream mid-response");
        done += static_cast<std::size_t>(r);
    }
}

std::vector<std::string> split_command(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!cur.empty()) {
                parts.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        parts.push_back(cur);
    return parts;
}

} // namespace

std::unique_ptr<ExternalDenoiser> ExternalDenoiser::connect(const std::string& uri,
                                                            int timeout_ms) {
    ignore_sigpipe_once();
    auto d = std::unique_ptr<ExternalDenoiser>(new ExternalDenoiser());
    d->timeout_ms_ = timeout_ms;

    if (uri.rfind("stdio:", 0) == 0) {
        const std::vector<std::string> argv_s = split_command(uri.substr(6));
        if (argv_s.empty())
            raise(errc::invalid_argument, "stdio: URI needs a command");

        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            raise(errc::io, "cannot create pipes for the denoiser process");

        const pid_t pid = ::fork();
        if (pid < 0)
            raise(errc::io, "cannot fork the denoiser process");
        if (pid == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> argv;
            for (const auto& a : argv_s)
                argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            ::execvp(argv[0], argv.data());
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        d->write_fd_ = to_child[1];
        d->read_fd_ = from_child[0];
        d->child_pid_ = pid;
        return d;
    }

    if (uri.rfind("tcp:", 0) == 0) {
        const std::string rest = uri.substr(4);
        const std::size_t colon = rest.rfind(':');
        if (colon == std::string::npos)
            raise(errc::invalid_argument, "tcp: URI must be tcp:host:port");
        const std::string host = rest.substr(0, colon);
        const std::string port = rest.substr(colon + 1);

        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
            raise(errc::protocol, "cannot resolve " + host + ":" + port);
        int fd = -1;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0)
                continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0)
                break;
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0)
            raise(errc::protocol, "cannot connect to " + host + ":" + port);
        d->write_fd_ = fd;
        d->read_fd_ = fd;
        return d;
    }

    raise(errc::invalid_argument, "denoiser URI must start with stdio: or tcp:");
}

ExternalDenoiser::~ExternalDenoiser() {
    if (write_fd_ >= 0)
        ::close(write_fd_);
    if (read_fd_ >= 0 && read_fd_ != write_fd_)
        ::close(read_fd_);
    if (child_pid_ > 0) {
        // Closing stdin asks the server to exit; reap it, escalating if needed.
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(static_cast<pid_t>(child_pid_), &status, WNOHANG) != 0)
                return;
            ::usleep(10000);
        }
        ::kill(static_cast<pid_t>(child_pid_), SIGKILL);
        ::waitpid(static_cast<pid_t>(child_pid_), &status, 0);
    }
}

void ExternalDenoiser::denoise(std::span<const double> x, double sigma,
                               std::span<double> out) const {
    const std::size_t n = x.size();
    if (n == 0 || n > 0xFFFFFFFFull)
        raise(errc::invalid_argument, "external denoiser dimension out of range");

    std::vector<unsigned char> req(wire::kRequestHeaderLen + 4 * n);
    std::memcpy(req.data(), wire::kMagic, 4);
    wire::put_u16(req.data() + 4, wire::kVersion);
    wire::put_u32(req.data() + 6, static_cast<std::uint32_t>(n));
    wire::put_f64(req.data() + 10, sigma);
    for (std::size_t i = 0; i < n; ++i)
        wire::put_f32(req.data() + wire::kRequestHeaderLen + 4 * i, static_cast<float>(x[i]));
    write_all(write_fd_, req.data(), req.size(), timeout_ms_);

    unsigned char status = 0;
    read_all(read_fd_, &status, 1, timeout_ms_);
    if (status != wire::ok)
        raise(errc::protocol,
              "external denoiser reported status " + std::to_string(static_cast<int>(status)));

    std::vector<unsigned char> payload(4 * n);
    read_all(read_fd_, payload.data(), payload.size(), timeout_ms_);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<double>(wire::get_f32(payload.data() + 4 * i));
}

} // namespace simdps
