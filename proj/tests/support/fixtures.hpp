#pragma once

// Shared identities and stock configurations for the server/client/attack tests.

#include "uatrust/client/client.hpp"
#include "uatrust/server/server.hpp"

#include <gtest/gtest.h>

#include <map>
#include <mutex>

namespace testsupport {

namespace pu = uatrust::secchan::policy_uri;
using uatrust::codec::MessageSecurityMode;

// Keys are slow to generate, so every process reuses one identity per name.
inline const uatrust::pki::Identity& identity(const std::string& name)
{
    static std::mutex m;
    static std::map<std::string, uatrust::pki::Identity> cache;
    std::lock_guard lock(m);
    auto it = cache.find(name);
    if (it == cache.end())
        it = cache.emplace(name, uatrust::pki::generate_identity(name, "urn:test:" + name, 365)).first;
    return it->second;
}

inline std::vector<uatrust::server::UserTokenSpec> tokens(bool anonymous, bool username)
{
    std::vector<uatrust::server::UserTokenSpec> t;
    if (anonymous) t.push_back({uatrust::codec::UserTokenType::Anonymous, {}, {}});
    if (username) t.push_back({uatrust::codec::UserTokenType::UserName, {}, {}});
    return t;
}

// Endpoints: None, Sign and SignAndEncrypt with Basic256Sha256, all offering the given tokens.
inline uatrust::server::ServerConfig server_config(const std::string& name, uatrust::pki::TrustPolicy policy,
                                                   bool anonymous = true, bool username = true, bool with_none = true)
{
    uatrust::server::ServerConfig cfg;
    cfg.application.application_uri = "urn:test:" + name;
    cfg.application.application_name = name;
    cfg.identity = identity(name);
    cfg.trust_policy = policy;
    cfg.port = 0;
    cfg.users = {{"operator", "secret"}};
    cfg.anonymous_allowed = anonymous;
    const auto t = tokens(anonymous, username);
    if (with_none) cfg.endpoints.push_back({"", MessageSecurityMode::None, std::string(pu::None), t});
    cfg.endpoints.push_back({"", MessageSecurityMode::Sign, std::string(pu::Basic256Sha256), t});
    cfg.endpoints.push_back({"", MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256Sha256), t});
    return cfg;
}

inline uatrust::client::ClientConfig client_config(const std::string& name, uatrust::pki::TrustPolicy policy,
                                                   uatrust::client::UserIdentity user = {})
{
    uatrust::client::ClientConfig cfg;
    cfg.identity = identity(name);
    cfg.trust_policy = policy;
    cfg.user = std::move(user);
    cfg.dial.timeout = uatrust::net::Millis(5000);
    return cfg;
}

template <class Fn>
uatrust::client::ClientError client_error_of(Fn&& fn)
{
    try {
        fn();
    } catch (const uatrust::client::ClientError& e) {
        return e;
    }
    ADD_FAILURE() << "expected ClientError";
    return uatrust::client::ClientError(uatrust::client::ClientErrc::Timeout, "no error thrown", uatrust::StatusCode{1});
}

inline uatrust::codec::EndpointDescription endpoint_with(const std::vector<uatrust::codec::EndpointDescription>& eps,
                                                         MessageSecurityMode mode)
{
    for (const auto& e : eps)
        if (e.security_mode == mode) return e;
    throw std::runtime_error("no endpoint with that mode");
}

// Speaks UA-TCP by hand so tests can send what a well-behaved client never would.
class RawPeer {
public:
    explicit RawPeer(std::uint16_t port)
        : stream_(uatrust::net::TcpStream::connect("127.0.0.1", port, uatrust::net::Millis(5000)))
    {
    }

    uatrust::net::TcpStream& stream() { return stream_; }

    void send(uatrust::ByteView chunk) { stream_.send(chunk); }
    uatrust::Bytes read() { return stream_.read_chunk(); }
    uatrust::Bytes exchange(uatrust::ByteView chunk)
    {
        send(chunk);
        return read();
    }

    uatrust::Bytes hello_chunk() const
    {
        uatrust::codec::HelloMessage h;
        h.endpoint_url = "opc.tcp://127.0.0.1";
        return uatrust::codec::encode_chunks(h, uatrust::codec::HeaderKind::Raw, nullptr, 0).front();
    }
    void hello() { exchange(hello_chunk()); }

    uatrust::Bytes none_open_chunk(MessageSecurityMode mode = MessageSecurityMode::None)
    {
        uatrust::codec::OpenSecureChannelRequest req;
        req.security_mode = mode;
        uatrust::codec::ChannelFraming f;
        f.asymmetric.security_policy_uri = std::string(pu::None);
        f.next_sequence_number = seq_;
        auto c = uatrust::codec::encode_chunks(req, uatrust::codec::HeaderKind::Asymmetric, &f, req_++).front();
        seq_ = f.next_sequence_number;
        return c;
    }

    // Opens a policy-None channel; false if the server answered anything but OPN.
    bool open_none()
    {
        const auto reply = exchange(none_open_chunk());
        if (uatrust::codec::parse_message_header(reply).type != uatrust::codec::MessageType::Open) return false;
        const auto msg = uatrust::codec::reassemble(std::span<const uatrust::Bytes>(&reply, 1));
        const auto& r = std::get<uatrust::codec::OpenSecureChannelResponse>(msg.body);
        channel_id_ = r.security_token.channel_id;
        token_id_ = r.security_token.token_id;
        return true;
    }

    uatrust::Bytes message_chunk(const uatrust::codec::ServiceBody& body)
    {
        uatrust::codec::ChannelFraming f;
        f.secure_channel_id = channel_id_;
        f.token_id = token_id_;
        f.next_sequence_number = seq_;
        auto c = uatrust::codec::encode_chunks(body, uatrust::codec::HeaderKind::Symmetric, &f, req_++).front();
        seq_ = f.next_sequence_number;
        return c;
    }

    // Sends one MSG chunk on a None channel and decodes the answer (ERR included).
    uatrust::codec::ServiceBody call(uatrust::ByteView chunk)
    {
        const auto reply = exchange(chunk);
        const auto h = uatrust::codec::parse_message_header(reply);
        if (h.type == uatrust::codec::MessageType::Error)
            return uatrust::codec::decode_body(h.type, uatrust::codec::parse_chunk(reply).body);
        return uatrust::codec::reassemble(std::span<const uatrust::Bytes>(&reply, 1)).body;
    }
    uatrust::codec::ServiceBody call(const uatrust::codec::ServiceBody& body) { return call(message_chunk(body)); }

    std::uint32_t channel_id() const { return channel_id_; }

private:
    uatrust::net::TcpStream stream_;
    std::uint32_t channel_id_ = 0;
    std::uint32_t token_id_ = 0;
    std::uint32_t seq_ = 1;
    std::uint32_t req_ = 1;
};

inline uatrust::StatusCode fault_status(const uatrust::codec::ServiceBody& body)
{
    if (auto* f = std::get_if<uatrust::codec::ServiceFault>(&body)) return f->response_header.service_result;
    if (auto* e = std::get_if<uatrust::codec::ErrorMessage>(&body)) return e->error;
    return uatrust::status::Good;
}

}  // namespace testsupport
