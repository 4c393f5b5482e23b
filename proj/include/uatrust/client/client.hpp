#pragma once

// A small OPC UA client. Channel is the protocol layer (TCP, HEL/ACK, OPN, request/response);
// create_session/activate_session are the session steps; Session composes all of it.
// The server certificate is judged before any OpenSecureChannel byte is sent.

#include "uatrust/net/tcp.hpp"
#include "uatrust/secchan/messenger.hpp"

#include <functional>

namespace uatrust::client {

using codec::EndpointDescription;
using codec::MessageSecurityMode;

enum class ClientErrc {
    ConnectFailed,
    ProtocolError,
    TrustRejected,
    CertificateChanged,
    AuthFailed,
    PolicyUnsupported,
    ServiceFault,
    Timeout,
};

const char* to_string(ClientErrc code);

class ClientError : public std::runtime_error {
public:
    ClientError(ClientErrc code, const std::string& what, StatusCode status = status::BadUnexpectedError)
        : std::runtime_error(what), code_(code), status_(status)
    {
    }
    ClientErrc code() const noexcept { return code_; }
    StatusCode status() const noexcept { return status_; }

private:
    ClientErrc code_;
    StatusCode status_;
};

struct UserIdentity {
    std::optional<std::string> user_name;  // nullopt: anonymous
    std::string password;

    static UserIdentity anonymous() { return {}; }
    static UserIdentity user(std::string name, std::string password);  // throws invalid_argument on empty name
    bool is_anonymous() const { return !user_name.has_value(); }
};

struct DialOptions {
    net::Millis timeout{10000};
    std::shared_ptr<net::Transcript> transcript;
    // TCP destination used instead of the host:port named by endpoint URLs.
    std::optional<net::Endpoint> dial_override;
};

struct ClientConfig {
    std::optional<pki::Identity> identity;
    std::string application_uri;  // defaults to the identity's URI
    std::string application_name = "uatrust client";
    pki::TrustPolicy trust_policy = pki::TrustPolicy::strict();
    std::shared_ptr<pki::TrustStore> trust_store = std::make_shared<pki::TrustStore>();
    std::optional<EndpointDescription> endpoint;  // nullopt: most secure available
    UserIdentity user;
    bool encrypt_token_under_none = true;
    DialOptions dial;
};

// Errors: ConnectFailed, Timeout, ProtocolError.
std::vector<EndpointDescription> discover(const std::string& url, const DialOptions& options = {});
std::vector<codec::ApplicationDescription> find_servers(const std::string& url, const DialOptions& options = {});

// SignAndEncrypt > Sign > None, then Basic256Sha256 > None, then list order. Endpoints whose
// policy this stack cannot speak are skipped. Errors: PolicyUnsupported when nothing is usable.
std::size_t select_endpoint(const std::vector<EndpointDescription>& endpoints);

class Channel {
public:
    // TCP connect plus HEL/ACK. Errors: ConnectFailed, Timeout, ProtocolError.
    static Channel dial(const std::string& endpoint_url, const DialOptions& options = {});

    Channel(Channel&&) noexcept;
    Channel& operator=(Channel&&) noexcept;
    ~Channel();

    // OpenSecureChannel for the endpoint's mode and policy. For secure modes the certificate in
    // the OPN response must byte-equal expected_server_certificate.
    // Errors: PolicyUnsupported, CertificateChanged, ProtocolError (ERR from the server carries
    // its status), Timeout.
    void open(MessageSecurityMode mode, const std::string& policy_uri, const std::optional<pki::Identity>& identity,
              const std::optional<pki::CertificateRecord>& expected_server_certificate);

    // Sends a request (header fields stamped here) and waits for its response. A ServiceFault is
    // returned as a ServiceFault body, not thrown.
    codec::ServiceBody call(codec::ServiceBody request, const codec::NodeId& authentication_token = {});

    // Like call, but throws ClientError(ServiceFault, status) when the answer is a fault or the
    // service result is bad, and ProtocolError when it is not an R.
    template <class R>
    R call_as(codec::ServiceBody request, const codec::NodeId& authentication_token = {})
    {
        auto body = call(std::move(request), authentication_token);
        check_response(body);
        if (auto* r = std::get_if<R>(&body)) return std::move(*r);
        throw ClientError(ClientErrc::ProtocolError, "unexpected response " + std::string(codec::body_name(body)));
    }

    // Sends CLO (best effort) and closes the socket.
    void close();

    bool is_open() const;
    const secchan::SecureChannelState& state() const;
    const std::optional<pki::CertificateRecord>& server_certificate() const;
    const std::shared_ptr<net::Transcript>& transcript() const;
    std::uint64_t bytes_sent() const;
    std::uint64_t bytes_received() const;
    const std::string& endpoint_url() const;

private:
    struct Impl;
    explicit Channel(std::unique_ptr<Impl> impl);
    static void check_response(const codec::ServiceBody& body);
    std::unique_ptr<Impl> impl_;
};

struct SessionHandle {
    codec::NodeId session_id;
    codec::NodeId authentication_token;
    Bytes client_nonce;
    Bytes server_nonce;  // latest, rotated by ActivateSession
    std::optional<pki::CertificateRecord> server_certificate;
    std::vector<EndpointDescription> server_endpoints;
    bool activated = false;
};

struct SessionRequestInfo {
    std::string application_uri;
    std::string application_name = "uatrust client";
    std::string endpoint_url;
    std::string session_name = "uatrust";
};

// Checks the server nonce (32+ bytes, not a replay of the channel nonce) and, on secure
// channels, the server certificate and signature. Errors: ServiceFault, ProtocolError,
// CertificateChanged.
SessionHandle create_session(Channel& channel, const SessionRequestInfo& info, const std::optional<pki::Identity>& identity);

struct ActivationOptions {
    bool encrypt_token_under_none = true;
    // Token policy from the endpoint; nullopt lets activate_session pick the first matching one.
    std::optional<codec::UserTokenPolicy> token_policy;
};

// Errors: AuthFailed (status carried), PolicyUnsupported (no matching token policy).
void activate_session(Channel& channel, SessionHandle& session, const EndpointDescription& endpoint,
                      const UserIdentity& user, const std::optional<pki::Identity>& identity,
                      const ActivationOptions& options = {});

class Session {
public:
    // Trust check, OPN, CreateSession, ActivateSession. Errors: every ClientErrc.
    static Session connect(const EndpointDescription& endpoint, const ClientConfig& config);
    // Discovers the endpoints at url first unless config.endpoint is set.
    static Session connect_url(const std::string& url, const ClientConfig& config);

    // Throws ClientError(ServiceFault) on a fault or a bad per-node status.
    codec::Variant read(const codec::NodeId& node);
    codec::DataValue read_data_value(const codec::NodeId& node);
    // Returns the per-node status; a ServiceFault is thrown.
    StatusCode write(const codec::NodeId& node, const codec::Variant& value);
    void close();

    Channel& channel() { return channel_; }
    const SessionHandle& handle() const { return handle_; }
    const EndpointDescription& endpoint() const { return endpoint_; }

private:
    Session(Channel channel, SessionHandle handle, EndpointDescription endpoint);
    Channel channel_;
    SessionHandle handle_;
    EndpointDescription endpoint_;
};

// The trust judgment Session::connect applies to an endpoint before dialing.
pki::TrustVerdict judge_endpoint(const EndpointDescription& endpoint, const ClientConfig& config);

}  // namespace uatrust::client
