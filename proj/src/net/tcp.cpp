#include "uatrust/net/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace uatrust::net {

namespace {

std::string errno_text()
{
    return std::strerror(errno);
}

sockaddr_in resolve(const std::string& host, std::uint16_t port, NetErrc on_error)
{
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = host.empty() ? "127.0.0.1" : host;
    if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res)
        throw NetError(on_error, "cannot resolve host " + h);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

std::uint16_t parse_port(std::string_view s)
{
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v > 65535)
        throw NetError(NetErrc::UrlInvalid, "bad port '" + std::string(s) + "'");
    return static_cast<std::uint16_t>(v);
}

}  // namespace

const char* to_string(NetErrc code)
{
    switch (code) {
    case NetErrc::ConnectFailed: return "ConnectFailed";
    case NetErrc::BindFailed: return "BindFailed";
    case NetErrc::Timeout: return "Timeout";
    case NetErrc::Closed: return "Closed";
    case NetErrc::Io: return "Io";
    case NetErrc::FrameInvalid: return "FrameInvalid";
    case NetErrc::UrlInvalid: return "UrlInvalid";
    }
    return "Unknown";
}

Endpoint parse_endpoint_url(std::string_view url)
{
    constexpr std::string_view scheme = "opc.tcp://";
    if (url.substr(0, scheme.size()) != scheme)
        throw NetError(NetErrc::UrlInvalid, "endpoint URL must start with opc.tcp://: " + std::string(url));
    std::string_view rest = url.substr(scheme.size());
    Endpoint ep;
    const auto slash = rest.find('/');
    if (slash != std::string_view::npos) {
        ep.path = std::string(rest.substr(slash));
        rest = rest.substr(0, slash);
    }
    const auto colon = rest.rfind(':');
    if (colon != std::string_view::npos) {
        ep.port = parse_port(rest.substr(colon + 1));
        if (ep.port == 0) throw NetError(NetErrc::UrlInvalid, "endpoint URL with port 0: " + std::string(url));
        rest = rest.substr(0, colon);
    }
    if (rest.empty()) throw NetError(NetErrc::UrlInvalid, "endpoint URL without host: " + std::string(url));
    ep.host = std::string(rest);
    return ep;
}

std::string make_endpoint_url(const std::string& host, std::uint16_t port, const std::string& path)
{
    return "opc.tcp://" + host + ":" + std::to_string(port) + path;
}

Endpoint parse_host_port(std::string_view text, std::uint16_t default_port)
{
    if (text.substr(0, 10) == "opc.tcp://") return parse_endpoint_url(text);
    Endpoint ep;
    ep.port = default_port;
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
        ep.host = std::string(text);
    } else {
        ep.host = std::string(text.substr(0, colon));
        ep.port = parse_port(text.substr(colon + 1));
    }
    if (ep.host.empty()) ep.host = "127.0.0.1";
    return ep;
}

// ---- TcpStream ----

TcpStream::TcpStream(int fd) : fd_(fd)
{
    const int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    set_timeout(kDefaultTimeout);
}

TcpStream::~TcpStream()
{
    close();
}

TcpStream::TcpStream(TcpStream&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      transcript_(std::move(other.transcript_)),
      sent_(other.sent_),
      received_(other.received_)
{
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
        transcript_ = std::move(other.transcript_);
        sent_ = other.sent_;
        received_ = other.received_;
    }
    return *this;
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, Millis timeout)
{
    const sockaddr_in addr = resolve(host, port, NetErrc::ConnectFailed);
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw NetError(NetErrc::ConnectFailed, "socket: " + errno_text());
    const int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno == EINPROGRESS) {
        pollfd p{fd, POLLOUT, 0};
        rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc == 0) {
            ::close(fd);
            throw NetError(NetErrc::Timeout, "connect to " + host + ":" + std::to_string(port) + " timed out");
        }
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        errno = err;
        rc = err == 0 ? 0 : -1;
    }
    if (rc != 0) {
        const std::string why = errno_text();
        ::close(fd);
        throw NetError(NetErrc::ConnectFailed, "connect to " + host + ":" + std::to_string(port) + ": " + why);
    }
    fcntl(fd, F_SETFL, flags);
    TcpStream s(fd);
    s.set_timeout(timeout);
    return s;
}

void TcpStream::set_timeout(Millis timeout)
{
    if (fd_ < 0) return;
    timeval tv{};
    tv.tv_sec = static_cast<long>(timeout.count() / 1000);
    tv.tv_usec = static_cast<long>((timeout.count() % 1000) * 1000);
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void TcpStream::send(ByteView data)
{
    if (fd_ < 0) throw NetError(NetErrc::Closed, "send on closed stream");
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError(NetErrc::Timeout, "send timed out");
            if (errno == EPIPE || errno == ECONNRESET) throw NetError(NetErrc::Closed, "peer closed connection");
            throw NetError(NetErrc::Io, "send: " + errno_text());
        }
        off += static_cast<std::size_t>(n);
    }
    sent_ += data.size();
    if (transcript_) transcript_->record(Direction::Sent, data);
}

void TcpStream::read_exact(std::uint8_t* out, std::size_t n, bool at_boundary)
{
    std::size_t off = 0;
    while (off < n) {
        const ssize_t r = ::recv(fd_, out + off, n - off, 0);
        if (r == 0)
            throw NetError(NetErrc::Closed, at_boundary && off == 0 ? "peer closed connection"
                                                                    : "peer closed connection mid-chunk");
        if (r < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError(NetErrc::Timeout, "read timed out");
            if (errno == ECONNRESET || errno == ENOTCONN || errno == EBADF)
                throw NetError(NetErrc::Closed, "connection reset");
            throw NetError(NetErrc::Io, "recv: " + errno_text());
        }
        off += static_cast<std::size_t>(r);
    }
}

Bytes TcpStream::read_chunk(std::size_t max_size)
{
    if (fd_ < 0) throw NetError(NetErrc::Closed, "read on closed stream");
    Bytes chunk(8);
    read_exact(chunk.data(), 8, true);
    const std::uint32_t size = static_cast<std::uint32_t>(chunk[4]) | static_cast<std::uint32_t>(chunk[5]) << 8 |
                               static_cast<std::uint32_t>(chunk[6]) << 16 | static_cast<std::uint32_t>(chunk[7]) << 24;
    if (size < 8 || size > max_size) {
        if (transcript_) transcript_->record(Direction::Received, chunk);
        throw NetError(NetErrc::FrameInvalid, "chunk size " + std::to_string(size) + " outside [8, " +
                                                  std::to_string(max_size) + "]");
    }
    chunk.resize(size);
    read_exact(chunk.data() + 8, size - 8, false);
    received_ += chunk.size();
    if (transcript_) transcript_->record(Direction::Received, chunk);
    return chunk;
}

Bytes TcpStream::read_some(std::size_t max)
{
    if (fd_ < 0) throw NetError(NetErrc::Closed, "read on closed stream");
    Bytes out(max);
    for (;;) {
        const ssize_t r = ::recv(fd_, out.data(), max, 0);
        if (r == 0) throw NetError(NetErrc::Closed, "peer closed connection");
        if (r < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError(NetErrc::Timeout, "read timed out");
            throw NetError(NetErrc::Closed, "recv: " + errno_text());
        }
        out.resize(static_cast<std::size_t>(r));
        received_ += out.size();
        if (transcript_) transcript_->record(Direction::Received, out);
        return out;
    }
}

void TcpStream::shutdown()
{
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

// ---- TcpListener ----

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port)
{
    const sockaddr_in addr = resolve(host, port, NetErrc::BindFailed);
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw NetError(NetErrc::BindFailed, "socket: " + errno_text());
    const int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 64) != 0) {
        const std::string why = errno_text();
        ::close(fd);
        throw NetError(NetErrc::BindFailed, "bind " + host + ":" + std::to_string(port) + ": " + why);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    TcpListener l;
    l.fd_ = fd;
    l.port_ = ntohs(bound.sin_port);
    l.host_ = host.empty() ? "127.0.0.1" : host;
    return l;
}

TcpListener::~TcpListener()
{
    close();
}

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), port_(other.port_), host_(std::move(other.host_))
{
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
        port_ = other.port_;
        host_ = std::move(other.host_);
    }
    return *this;
}

std::optional<TcpStream> TcpListener::accept(Millis timeout)
{
    if (fd_ < 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc <= 0 || !(p.revents & POLLIN)) return std::nullopt;
    const int c = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (c < 0) return std::nullopt;
    return TcpStream(c);
}

void TcpListener::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

}  // namespace uatrust::net
