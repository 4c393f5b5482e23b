#pragma once

// A small OPC UA server: discovery, secure channel establishment judged by a TrustPolicy,
// sessions with Anonymous and UserName identities, and Read/Write over a NodeStore.
// Hooks let the attack engines reuse it as a rogue server and as the front half of a
// middleperson.

#include "uatrust/net/tcp.hpp"
#include "uatrust/secchan/messenger.hpp"
#include "uatrust/server/node_store.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <thread>

namespace uatrust::server {

using codec::MessageSecurityMode;
using codec::UserTokenType;

class ServerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UserTokenSpec {
    UserTokenType type = UserTokenType::Anonymous;
    // Policy protecting the token secret; empty means "same as the channel".
    std::string security_policy_uri;
    std::string policy_id;  // generated when empty
};

struct EndpointDescriptor {
    std::string endpoint_url;  // filled from the listen address when empty
    MessageSecurityMode mode = MessageSecurityMode::None;
    std::string security_policy_uri{secchan::policy_uri::None};
    std::vector<UserTokenSpec> user_token_policies;
};

struct ApplicationInfo {
    std::string application_uri = "urn:uatrust:server";
    std::string product_uri = "urn:uatrust";
    std::string application_name = "uatrust server";
};

struct ChannelInfo {
    std::uint32_t channel_id = 0;
    MessageSecurityMode mode = MessageSecurityMode::None;
    std::string security_policy_uri;
    std::optional<pki::CertificateRecord> client_certificate;
    std::string peer;
};

struct SessionInfo {
    codec::NodeId session_id;
    codec::NodeId authentication_token;
    Bytes server_nonce;
    Bytes client_nonce;
    bool activated = false;
    std::optional<std::string> user;  // nullopt: anonymous
    codec::ApplicationDescription client_description;
    std::optional<pki::CertificateRecord> client_certificate;
};

struct AuthRequest {
    const ChannelInfo& channel;
    const SessionInfo& session;
    UserTokenType token_type = UserTokenType::Anonymous;
    std::string user_name;
    std::string password;
    bool password_encrypted = false;
    std::string secret_policy_uri;  // policy the password was encrypted under; None when plain
};

// Decides a user identity once the token has been decoded (and decrypted). Good activates.
using AuthenticateHook = std::function<StatusCode(const AuthRequest&)>;

struct ServiceCall {
    const ChannelInfo& channel;
    SessionInfo* session;  // the activated session named by the request, if any
    codec::ServiceBody& request;
};

// Runs before built-in Read/Write handling and for unknown services. A returned body is sent as
// the response; nullopt continues with the built-in behavior.
using ServiceInterceptor = std::function<std::optional<codec::ServiceBody>(ServiceCall&)>;

using ChannelHook = std::function<void(const ChannelInfo&, const secchan::SecureChannelState&)>;

struct ServerConfig {
    ApplicationInfo application;
    std::optional<pki::Identity> identity;
    std::vector<EndpointDescriptor> endpoints;
    pki::TrustPolicy trust_policy = pki::TrustPolicy::strict();
    std::shared_ptr<pki::TrustStore> trust_store = std::make_shared<pki::TrustStore>();
    std::map<std::string, std::string> users;
    bool anonymous_allowed = false;
    std::shared_ptr<NodeStore> nodes = std::make_shared<NodeStore>(default_nodes());
    std::string host = "127.0.0.1";
    std::uint16_t port = 4840;

    AuthenticateHook authenticate;
    ServiceInterceptor intercept;
    ChannelHook on_channel_open;
    std::shared_ptr<net::Transcript> transcript;
    net::Millis io_timeout{10000};
    codec::ChunkLimits limits;
};

// Throws ServerError on: a secure endpoint without identity, mode/policy disagreement, unknown
// or refused policies, or an identity key below 2048 bits.
void validate_config(const ServerConfig& config);

struct ServerStats {
    std::uint64_t connections = 0;
    std::uint64_t channels_opened = 0;
    std::uint64_t secure_channels_opened = 0;
    std::uint64_t channels_rejected = 0;
    std::uint64_t sessions_created = 0;
    std::uint64_t sessions_activated = 0;
    std::uint64_t activation_failures = 0;
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
};

class Server {
public:
    // Binds and starts accepting. Errors: net::NetError(BindFailed), ServerError.
    static std::unique_ptr<Server> start(ServerConfig config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Closes the listener and every connection, then joins all handlers. Idempotent.
    void stop();

    std::uint16_t port() const { return port_; }
    std::string url() const;
    const ServerConfig& config() const { return config_; }
    std::vector<codec::EndpointDescription> endpoint_descriptions() const;
    codec::ApplicationDescription application_description() const;
    ServerStats stats() const;
    std::vector<ChannelInfo> opened_channels() const;

private:
    class Connection;
    explicit Server(ServerConfig config);
    void accept_loop();
    void serve_connection(const std::shared_ptr<Connection>& conn);

    ServerConfig config_;
    net::TcpListener listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    mutable std::mutex mutex_;
    std::vector<std::shared_ptr<Connection>> connections_;
    std::vector<std::thread> handlers_;
    std::vector<ChannelInfo> channels_;
    ServerStats stats_;
    std::atomic<std::uint32_t> next_channel_id_{1};
    std::atomic<std::uint32_t> next_session_id_{1};

    friend class ConnectionHandler;
};

std::string security_level_name(MessageSecurityMode mode);

}  // namespace uatrust::server
