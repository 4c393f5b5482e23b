#pragma once

// Blocking POSIX TCP with per-operation timeouts, chunk-granular reads and optional transcript
// capture. IPv4 only.

#include "uatrust/net/transcript.hpp"

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace uatrust::net {

enum class NetErrc { ConnectFailed, BindFailed, Timeout, Closed, Io, FrameInvalid, UrlInvalid };

const char* to_string(NetErrc code);

class NetError : public std::runtime_error {
public:
    NetError(NetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    NetErrc code() const noexcept { return code_; }

private:
    NetErrc code_;
};

using Millis = std::chrono::milliseconds;
inline constexpr Millis kDefaultTimeout{10000};

struct Endpoint {
    std::string host;
    std::uint16_t port = 4840;
    std::string path;

    std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "opc.tcp://host[:port][/path]"; the port defaults to 4840. Errors: UrlInvalid.
Endpoint parse_endpoint_url(std::string_view url);
std::string make_endpoint_url(const std::string& host, std::uint16_t port, const std::string& path = {});
// "host:port" or ":port" (host defaults to 127.0.0.1; port 0 allowed for listening). Errors: UrlInvalid.
Endpoint parse_host_port(std::string_view text, std::uint16_t default_port = 4840);

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd);
    ~TcpStream();
    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    // Errors: ConnectFailed, Timeout.
    static TcpStream connect(const std::string& host, std::uint16_t port, Millis timeout = kDefaultTimeout);

    bool is_open() const { return fd_ >= 0; }
    void set_timeout(Millis timeout);
    void attach_transcript(std::shared_ptr<Transcript> transcript) { transcript_ = std::move(transcript); }
    const std::shared_ptr<Transcript>& transcript() const { return transcript_; }

    // Errors: Closed, Io, Timeout.
    void send(ByteView data);
    // Reads one UA-TCP chunk (8-byte header then the rest of message_size).
    // Errors: Closed (peer closed), Timeout, FrameInvalid (size < 8 or > max_size).
    Bytes read_chunk(std::size_t max_size = 1 << 24);
    // Up to max bytes of whatever is available, waiting at most the stream timeout.
    Bytes read_some(std::size_t max);

    // Wakes any thread blocked in a read on this stream. Safe to call concurrently.
    void shutdown();
    void close();

    std::uint64_t bytes_sent() const { return sent_; }
    std::uint64_t bytes_received() const { return received_; }

private:
    void read_exact(std::uint8_t* out, std::size_t n, bool at_boundary);

    int fd_ = -1;
    std::shared_ptr<Transcript> transcript_;
    std::uint64_t sent_ = 0;
    std::uint64_t received_ = 0;
};

class TcpListener {
public:
    // Port 0 picks an ephemeral port. Errors: BindFailed.
    static TcpListener bind(const std::string& host, std::uint16_t port);

    TcpListener() = default;
    ~TcpListener();
    TcpListener(TcpListener&& other) noexcept;
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    const std::string& host() const { return host_; }
    // Returns nullopt on timeout or after close().
    std::optional<TcpStream> accept(Millis timeout);
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
    std::string host_;
};

}  // namespace uatrust::net
