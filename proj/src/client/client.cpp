#include "uatrust/client/client.hpp"

#include "uatrust/secchan/token.hpp"

#include <algorithm>

namespace uatrust::client {

namespace {

using namespace codec;
namespace pu = secchan::policy_uri;

constexpr std::uint32_t kBufferSize = 65536;
constexpr std::size_t kSessionNonceSize = 32;

[[noreturn]] void rethrow_net(const net::NetError& e)
{
    switch (e.code()) {
    case net::NetErrc::ConnectFailed:
    case net::NetErrc::UrlInvalid: throw ClientError(ClientErrc::ConnectFailed, e.what(), status::BadCommunicationError);
    case net::NetErrc::Timeout: throw ClientError(ClientErrc::Timeout, e.what(), status::BadTimeout);
    default: throw ClientError(ClientErrc::ProtocolError, e.what(), status::BadCommunicationError);
    }
}

[[noreturn]] void throw_server_error(ByteView chunk)
{
    const Chunk c = parse_chunk(chunk);
    const auto err = std::get<ErrorMessage>(decode_body(MessageType::Error, c.body));
    throw ClientError(ClientErrc::ProtocolError,
                      "server error " + status_name(err.error) + ": " + sanitize_utf8(err.reason.value_or("")),
                      err.error);
}

bool is_secure_mode(MessageSecurityMode m)
{
    return m == MessageSecurityMode::Sign || m == MessageSecurityMode::SignAndEncrypt;
}

int mode_rank(MessageSecurityMode m)
{
    switch (m) {
    case MessageSecurityMode::SignAndEncrypt: return 3;
    case MessageSecurityMode::Sign: return 2;
    case MessageSecurityMode::None: return 1;
    default: return 0;
    }
}

int policy_rank(const std::string& uri)
{
    if (uri == pu::Basic256Sha256) return 2;
    if (uri == pu::None) return 1;
    return 0;
}

}  // namespace

const char* to_string(ClientErrc code)
{
    switch (code) {
    case ClientErrc::ConnectFailed: return "ConnectFailed";
    case ClientErrc::ProtocolError: return "ProtocolError";
    case ClientErrc::TrustRejected: return "TrustRejected";
    case ClientErrc::CertificateChanged: return "CertificateChanged";
    case ClientErrc::AuthFailed: return "AuthFailed";
    case ClientErrc::PolicyUnsupported: return "PolicyUnsupported";
    case ClientErrc::ServiceFault: return "ServiceFault";
    case ClientErrc::Timeout: return "Timeout";
    }
    return "Unknown";
}

UserIdentity UserIdentity::user(std::string name, std::string password)
{
    if (name.empty()) throw std::invalid_argument("user name must not be empty");
    return {std::move(name), std::move(password)};
}

struct Channel::Impl {
    net::TcpStream stream;
    DialOptions options;
    std::string url;
    ChunkLimits limits;
    std::optional<secchan::SecureMessenger> messenger;
    std::optional<pki::CertificateRecord> server_certificate;
    std::uint32_t next_request_id = 1;
    std::uint32_t next_handle = 1;

    Bytes read_chunk()
    {
        try {
            return stream.read_chunk(std::size_t{1} << 24);
        } catch (const net::NetError& e) {
            rethrow_net(e);
        }
    }
    void send(const std::vector<Bytes>& chunks)
    {
        try {
            for (const auto& c : chunks) stream.send(c);
        } catch (const net::NetError& e) {
            rethrow_net(e);
        }
    }
};

Channel::Channel(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Channel::Channel(Channel&&) noexcept = default;
Channel& Channel::operator=(Channel&&) noexcept = default;
Channel::~Channel() = default;

Channel Channel::dial(const std::string& endpoint_url, const DialOptions& options)
{
    auto impl = std::make_unique<Impl>();
    impl->options = options;
    impl->url = endpoint_url;
    try {
        net::Endpoint target = net::parse_endpoint_url(endpoint_url);
        if (options.dial_override) target = *options.dial_override;
        impl->stream = net::TcpStream::connect(target.host, target.port, options.timeout);
    } catch (const net::NetError& e) {
        rethrow_net(e);
    }
    if (options.transcript) impl->stream.attach_transcript(options.transcript);

    HelloMessage hello;
    hello.receive_buffer_size = kBufferSize;
    hello.send_buffer_size = kBufferSize;
    hello.max_chunk_count = kDefaultMaxChunkCount;
    hello.endpoint_url = endpoint_url;
    impl->send(encode_chunks(hello, HeaderKind::Raw, nullptr, 0));
    const Bytes reply = impl->read_chunk();
    try {
        const auto header = parse_message_header(reply);
        if (header.type == MessageType::Error) throw_server_error(reply);
        if (header.type != MessageType::Acknowledge)
            throw ClientError(ClientErrc::ProtocolError, "expected ACK, got " + std::string(tag_of(header.type)));
        const auto ack = std::get<AcknowledgeMessage>(decode_body(MessageType::Acknowledge, parse_chunk(reply).body));
        impl->limits.max_chunk_size =
            std::max(kMinChunkSize, ack.receive_buffer_size == 0 ? kBufferSize : std::min(kBufferSize, ack.receive_buffer_size));
        if (ack.max_chunk_count != 0) impl->limits.max_chunk_count = std::min(impl->limits.max_chunk_count, ack.max_chunk_count);
    } catch (const CodecError& e) {
        throw ClientError(ClientErrc::ProtocolError, std::string("bad ACK: ") + e.what(), status::BadDecodingError);
    }
    return Channel(std::move(impl));
}

void Channel::open(MessageSecurityMode mode, const std::string& policy_uri, const std::optional<pki::Identity>& identity,
                   const std::optional<pki::CertificateRecord>& expected_server_certificate)
{
    auto& d = *impl_;
    if (d.messenger) throw ClientError(ClientErrc::ProtocolError, "secure channel already open");
    const secchan::SecurityPolicySuite* suite = nullptr;
    try {
        suite = &secchan::suite_for_uri(policy_uri);
    } catch (const secchan::SecError& e) {
        throw ClientError(ClientErrc::PolicyUnsupported, e.what(), status::BadSecurityPolicyRejected);
    }
    const bool secure = !suite->none;
    if (secure != is_secure_mode(mode))
        throw ClientError(ClientErrc::PolicyUnsupported, "security mode does not match the policy",
                          status::BadSecurityModeRejected);
    if (secure && (!identity || !expected_server_certificate))
        throw ClientError(ClientErrc::PolicyUnsupported,
                          "secure channel needs a client identity and the server certificate",
                          status::BadSecurityPolicyRejected);

    static const pki::Identity kNoIdentity;
    const pki::Identity& own = identity ? *identity : kNoIdentity;

    OpenSecureChannelRequest req;
    req.request_header.timestamp = DateTime::now();
    req.request_header.request_handle = d.next_handle++;
    req.request_header.timeout_hint = static_cast<std::uint32_t>(d.options.timeout.count());
    req.security_mode = mode;
    const Bytes client_nonce = secure ? secchan::fresh_nonce(*suite) : Bytes{};
    if (secure) req.client_nonce = client_nonce;
    else req.client_nonce = Bytes{};

    ChannelFraming framing;
    framing.asymmetric = secchan::asymmetric_header(*suite, secure ? &own : nullptr,
                                                    secure ? &*expected_server_certificate : nullptr);
    const std::uint32_t request_id = d.next_request_id++;
    auto chunks = encode_chunks(req, HeaderKind::Asymmetric, &framing, request_id, d.limits);
    if (secure)
        for (auto& c : chunks)
            c = secchan::protect_open_secure_channel(c, own, *expected_server_certificate, *suite, d.limits.max_chunk_size);
    d.send(chunks);

    const Bytes reply = d.read_chunk();
    bool changed = false;
    secchan::OpenedChunk opened;
    Reassembled msg;
    try {
        const auto header = parse_message_header(reply);
        if (header.type == MessageType::Error) throw_server_error(reply);
        if (header.type != MessageType::Open)
            throw ClientError(ClientErrc::ProtocolError, "expected OPN, got " + std::string(tag_of(header.type)));
        opened = secchan::unprotect_open_secure_channel(reply, own, [&](const pki::CertificateRecord& cert) {
            if (expected_server_certificate && cert.der == expected_server_certificate->der)
                return pki::TrustVerdict::accept();
            changed = true;
            return pki::TrustVerdict::reject(status::BadCertificateInvalid);
        });
        msg = reassemble(std::span<const Bytes>(&opened.chunk, 1));
    } catch (const secchan::SecError& e) {
        if (changed)
            throw ClientError(ClientErrc::CertificateChanged,
                              "server presented a different certificate in OpenSecureChannel",
                              status::BadCertificateInvalid);
        throw ClientError(ClientErrc::ProtocolError, e.what(), e.status());
    } catch (const CodecError& e) {
        throw ClientError(ClientErrc::ProtocolError, std::string("bad OPN response: ") + e.what(),
                          status::BadDecodingError);
    }
    if (opened.suite != suite)
        throw ClientError(ClientErrc::ProtocolError, "server answered with a different security policy");
    check_response(msg.body);
    const auto* resp = std::get_if<OpenSecureChannelResponse>(&msg.body);
    if (!resp) throw ClientError(ClientErrc::ProtocolError, "OPN reply is not an OpenSecureChannelResponse");
    if (msg.sequence.request_id != request_id) throw ClientError(ClientErrc::ProtocolError, "OPN request id mismatch");
    const Bytes server_nonce = resp->server_nonce.value_or(Bytes{});
    if (secure && server_nonce.size() != suite->nonce_length)
        throw ClientError(ClientErrc::ProtocolError, "server nonce has the wrong length", status::BadNonceInvalid);

    secchan::SecureChannelState st;
    st.channel_id = resp->security_token.channel_id;
    st.token_id = resp->security_token.token_id;
    st.suite = suite;
    st.mode = mode;
    st.local_nonce = client_nonce;
    st.remote_nonce = server_nonce;
    st.send_sequence = framing.next_sequence_number;
    st.recv_sequence = msg.sequence.sequence_number;
    if (secure) {
        st.local = own;
        st.remote = opened.sender;
    }
    st.establish_keys();
    d.messenger.emplace(std::move(st), d.limits);
    d.server_certificate = secure ? opened.sender : std::nullopt;
}

ServiceBody Channel::call(ServiceBody request, const NodeId& authentication_token)
{
    auto& d = *impl_;
    if (!d.messenger) throw ClientError(ClientErrc::ProtocolError, "no secure channel is open");
    if (!d.stream.is_open()) throw ClientError(ClientErrc::ProtocolError, "connection is closed");
    if (RequestHeader* h = request_header_of(request)) {
        h->authentication_token = authentication_token;
        h->timestamp = DateTime::now();
        h->request_handle = d.next_handle++;
        h->timeout_hint = static_cast<std::uint32_t>(d.options.timeout.count());
    }
    const std::uint32_t request_id = d.next_request_id++;
    d.send(d.messenger->seal(request, request_id));
    for (;;) {
        const Bytes chunk = d.read_chunk();
        std::optional<Reassembled> msg;
        try {
            const auto header = parse_message_header(chunk);
            if (header.type == MessageType::Error) throw_server_error(chunk);
            if (header.type != MessageType::Message)
                throw ClientError(ClientErrc::ProtocolError, "unexpected " + std::string(tag_of(header.type)));
            msg = d.messenger->open(chunk);
        } catch (const secchan::SecError& e) {
            throw ClientError(ClientErrc::ProtocolError, e.what(), e.status());
        } catch (const CodecError& e) {
            throw ClientError(ClientErrc::ProtocolError, e.what(), status::BadDecodingError);
        }
        if (!msg) continue;
        if (msg->sequence.request_id != request_id)
            throw ClientError(ClientErrc::ProtocolError, "response for an unknown request id");
        return std::move(msg->body);
    }
}

void Channel::check_response(const ServiceBody& body)
{
    if (const auto* f = std::get_if<ServiceFault>(&body))
        throw ClientError(ClientErrc::ServiceFault, "service fault " + status_name(f->response_header.service_result),
                          f->response_header.service_result);
    if (const auto* h = response_header_of(body); h && h->service_result.bad())
        throw ClientError(ClientErrc::ServiceFault, "service result " + status_name(h->service_result),
                          h->service_result);
}

void Channel::close()
{
    if (!impl_) return;
    auto& d = *impl_;
    if (d.messenger && d.stream.is_open()) {
        try {
            CloseSecureChannelRequest clo;
            clo.request_header.timestamp = DateTime::now();
            clo.request_header.request_handle = d.next_handle++;
            for (const auto& c : d.messenger->seal(clo, d.next_request_id++)) d.stream.send(c);
        } catch (const std::exception&) {
            // best effort: the server may already have closed
        }
    }
    d.messenger.reset();
    d.stream.close();
}

bool Channel::is_open() const { return impl_ && impl_->messenger && impl_->stream.is_open(); }
const secchan::SecureChannelState& Channel::state() const
{
    if (!impl_->messenger) throw ClientError(ClientErrc::ProtocolError, "no secure channel is open");
    return impl_->messenger->state();
}
const std::optional<pki::CertificateRecord>& Channel::server_certificate() const { return impl_->server_certificate; }
const std::shared_ptr<net::Transcript>& Channel::transcript() const { return impl_->stream.transcript(); }
std::uint64_t Channel::bytes_sent() const { return impl_->stream.bytes_sent(); }
std::uint64_t Channel::bytes_received() const { return impl_->stream.bytes_received(); }
const std::string& Channel::endpoint_url() const { return impl_->url; }

std::vector<EndpointDescription> discover(const std::string& url, const DialOptions& options)
{
    Channel ch = Channel::dial(url, options);
    ch.open(MessageSecurityMode::None, std::string(pu::None), std::nullopt, std::nullopt);
    GetEndpointsRequest req;
    req.endpoint_url = url;
    auto resp = ch.call_as<GetEndpointsResponse>(req);
    ch.close();
    return resp.endpoints;
}

std::vector<ApplicationDescription> find_servers(const std::string& url, const DialOptions& options)
{
    Channel ch = Channel::dial(url, options);
    ch.open(MessageSecurityMode::None, std::string(pu::None), std::nullopt, std::nullopt);
    FindServersRequest req;
    req.endpoint_url = url;
    auto resp = ch.call_as<FindServersResponse>(req);
    ch.close();
    return resp.servers;
}

std::size_t select_endpoint(const std::vector<EndpointDescription>& endpoints)
{
    std::optional<std::size_t> best;
    std::pair<int, int> best_rank{0, 0};
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
        const auto& e = endpoints[i];
        const std::string policy = e.security_policy_uri.value_or("");
        const std::pair<int, int> rank{mode_rank(e.security_mode), policy_rank(policy)};
        if (rank.first == 0 || rank.second == 0) continue;
        if ((policy == pu::None) != (e.security_mode == MessageSecurityMode::None)) continue;
        if (!best || rank > best_rank) {
            best = i;
            best_rank = rank;
        }
    }
    if (!best) throw ClientError(ClientErrc::PolicyUnsupported, "no usable endpoint", status::BadSecurityPolicyRejected);
    return *best;
}

SessionHandle create_session(Channel& channel, const SessionRequestInfo& info, const std::optional<pki::Identity>& identity)
{
    const bool secure = is_secure_mode(channel.state().mode);
    SessionHandle s;
    s.client_nonce = random_bytes(kSessionNonceSize);
    CreateSessionRequest req;
    req.client_description.application_uri = info.application_uri;
    req.client_description.product_uri = "urn:uatrust";
    req.client_description.application_name = LocalizedText::of(info.application_name);
    req.client_description.application_type = ApplicationType::Client;
    req.endpoint_url = info.endpoint_url;
    req.session_name = info.session_name;
    req.client_nonce = s.client_nonce;
    if (identity) req.client_certificate = identity->certificate.der;
    auto resp = channel.call_as<CreateSessionResponse>(req);

    const Bytes server_nonce = resp.server_nonce.value_or(Bytes{});
    if (server_nonce.size() < kSessionNonceSize || server_nonce == channel.state().remote_nonce)
        throw ClientError(ClientErrc::ProtocolError, "server session nonce is missing or reused", status::BadNonceInvalid);
    if (secure) {
        const auto& cert = *channel.server_certificate();
        if (resp.server_certificate.value_or(Bytes{}) != cert.der)
            throw ClientError(ClientErrc::CertificateChanged, "CreateSession returned a different server certificate",
                              status::BadCertificateInvalid);
        const auto& sig = resp.server_signature.signature;
        if (!sig || !secchan::verify_session(cert, identity->certificate.der, s.client_nonce, *sig))
            throw ClientError(ClientErrc::ProtocolError, "server signature does not verify",
                              status::BadApplicationSignatureInvalid);
        s.server_certificate = cert;
    } else if (resp.server_certificate && !resp.server_certificate->empty()) {
        try {
            s.server_certificate = pki::CertificateRecord::parse(*resp.server_certificate);
        } catch (const pki::PkiError&) {
            // without a usable certificate the token can only travel in plaintext
        }
    }
    s.session_id = resp.session_id;
    s.authentication_token = resp.authentication_token;
    s.server_nonce = server_nonce;
    s.server_endpoints = resp.server_endpoints;
    return s;
}

void activate_session(Channel& channel, SessionHandle& session, const EndpointDescription& endpoint,
                      const UserIdentity& user, const std::optional<pki::Identity>& identity,
                      const ActivationOptions& options)
{
    const bool secure = is_secure_mode(channel.state().mode);
    const UserTokenType wanted = user.is_anonymous() ? UserTokenType::Anonymous : UserTokenType::UserName;
    std::optional<UserTokenPolicy> policy = options.token_policy;
    if (!policy)
        for (const auto& t : endpoint.user_identity_tokens)
            if (t.token_type == wanted) {
                policy = t;
                break;
            }
    if (!policy)
        throw ClientError(ClientErrc::PolicyUnsupported,
                          std::string("endpoint offers no ") + to_string(wanted) + " token policy",
                          status::BadIdentityTokenRejected);

    ActivateSessionRequest req;
    if (secure) {
        req.client_signature.algorithm = std::string(secchan::kRsaSha256Uri);
        req.client_signature.signature =
            secchan::sign_session(identity->key, session.server_certificate->der, session.server_nonce);
    }
    if (user.is_anonymous()) {
        req.user_identity_token = make_extension_object(encoding_id::AnonymousIdentityToken,
                                                        AnonymousIdentityToken{policy->policy_id});
    } else {
        UserNameIdentityToken tok;
        tok.policy_id = policy->policy_id;
        tok.user_name = *user.user_name;
        std::string token_policy = policy->security_policy_uri.value_or("");
        if (token_policy.empty()) token_policy = endpoint.security_policy_uri.value_or(std::string(pu::None));
        const secchan::SecurityPolicySuite* suite = nullptr;
        if (token_policy != pu::None) {
            try {
                suite = &secchan::suite_for_uri(token_policy);
            } catch (const secchan::SecError& e) {
                throw ClientError(ClientErrc::PolicyUnsupported, e.what(), status::BadSecurityPolicyRejected);
            }
            if (!session.server_certificate)
                throw ClientError(ClientErrc::PolicyUnsupported, "token encryption needs the server certificate",
                                  status::BadIdentityTokenInvalid);
        } else if (options.encrypt_token_under_none && session.server_certificate) {
            suite = &secchan::suite_basic256sha256();
        }
        try {
            if (suite) {
                tok.password = secchan::encrypt_password_token(user.password, *session.server_certificate,
                                                               session.server_nonce, *suite);
                tok.encryption_algorithm = std::string(secchan::kRsaOaepUri);
            } else {
                tok.password = to_bytes(user.password);
            }
        } catch (const secchan::SecError& e) {
            throw ClientError(ClientErrc::AuthFailed, e.what(), status::BadIdentityTokenInvalid);
        }
        req.user_identity_token = make_extension_object(encoding_id::UserNameIdentityToken, tok);
    }

    ActivateSessionResponse resp;
    try {
        resp = channel.call_as<ActivateSessionResponse>(req, session.authentication_token);
    } catch (const ClientError& e) {
        if (e.code() != ClientErrc::ServiceFault) throw;
        throw ClientError(ClientErrc::AuthFailed, std::string("ActivateSession rejected: ") + e.what(), e.status());
    }
    if (resp.server_nonce && !resp.server_nonce->empty()) session.server_nonce = *resp.server_nonce;
    session.activated = true;
}

pki::TrustVerdict judge_endpoint(const EndpointDescription& endpoint, const ClientConfig& config)
{
    if (!is_secure_mode(endpoint.security_mode)) return pki::TrustVerdict::accept();
    if (!endpoint.server_certificate || endpoint.server_certificate->empty())
        return pki::TrustVerdict::reject(status::BadCertificateInvalid);
    std::optional<pki::CertificateRecord> cert;
    try {
        cert = pki::CertificateRecord::parse(*endpoint.server_certificate);
    } catch (const pki::PkiError&) {
        return pki::TrustVerdict::reject(status::BadCertificateInvalid);
    }
    return pki::validate_peer(*cert, config.trust_policy, *config.trust_store);
}

Session::Session(Channel channel, SessionHandle handle, EndpointDescription endpoint)
    : channel_(std::move(channel)), handle_(std::move(handle)), endpoint_(std::move(endpoint))
{
}

Session Session::connect(const EndpointDescription& endpoint, const ClientConfig& config)
{
    const bool secure = is_secure_mode(endpoint.security_mode);
    if (secure && !config.identity)
        throw ClientError(ClientErrc::PolicyUnsupported, "secure endpoint needs a client identity",
                          status::BadSecurityPolicyRejected);
    const pki::TrustVerdict verdict = judge_endpoint(endpoint, config);
    if (!verdict)
        throw ClientError(ClientErrc::TrustRejected, "server certificate rejected: " + status_name(verdict.reason),
                          verdict.reason);
    std::optional<pki::CertificateRecord> server_cert;
    if (secure) server_cert = pki::CertificateRecord::parse(*endpoint.server_certificate);

    const std::string url = endpoint.endpoint_url.value_or("");
    Channel channel = Channel::dial(url, config.dial);
    channel.open(endpoint.security_mode, endpoint.security_policy_uri.value_or(""), config.identity, server_cert);

    SessionRequestInfo info;
    info.application_uri = !config.application_uri.empty() ? config.application_uri
                           : config.identity            ? config.identity->certificate.application_uri
                                                        : std::string("urn:uatrust:client");
    info.application_name = config.application_name;
    info.endpoint_url = url;
    SessionHandle handle = create_session(channel, info, config.identity);
    ActivationOptions opts;
    opts.encrypt_token_under_none = config.encrypt_token_under_none;
    activate_session(channel, handle, endpoint, config.user, config.identity, opts);
    return Session(std::move(channel), std::move(handle), endpoint);
}

Session Session::connect_url(const std::string& url, const ClientConfig& config)
{
    if (config.endpoint) return connect(*config.endpoint, config);
    const auto endpoints = discover(url, config.dial);
    return connect(endpoints.at(select_endpoint(endpoints)), config);
}

DataValue Session::read_data_value(const NodeId& node)
{
    ReadRequest req;
    req.nodes_to_read.push_back(ReadValueId{node, kAttributeValue, {}, {}});
    auto resp = channel_.call_as<ReadResponse>(req, handle_.authentication_token);
    if (resp.results.size() != 1) throw ClientError(ClientErrc::ProtocolError, "read returned the wrong result count");
    return resp.results.front();
}

Variant Session::read(const NodeId& node)
{
    const DataValue dv = read_data_value(node);
    if (dv.status && dv.status->bad())
        throw ClientError(ClientErrc::ServiceFault, "read of " + node.to_string() + ": " + status_name(*dv.status),
                          *dv.status);
    return dv.value.value_or(Variant{});
}

StatusCode Session::write(const NodeId& node, const Variant& value)
{
    WriteRequest req;
    WriteValue wv;
    wv.node_id = node;
    wv.value.value = value;
    req.nodes_to_write.push_back(std::move(wv));
    auto resp = channel_.call_as<WriteResponse>(req, handle_.authentication_token);
    if (resp.results.size() != 1) throw ClientError(ClientErrc::ProtocolError, "write returned the wrong result count");
    return resp.results.front();
}

void Session::close()
{
    if (channel_.is_open()) {
        try {
            channel_.call(CloseSessionRequest{}, handle_.authentication_token);
        } catch (const ClientError&) {
            // closing anyway
        }
    }
    channel_.close();
}

}  // namespace uatrust::client
