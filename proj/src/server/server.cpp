#include "uatrust/server/server.hpp"

#include "uatrust/secchan/token.hpp"

#include <algorithm>

namespace uatrust::server {

namespace {

using namespace codec;
namespace pu = secchan::policy_uri;

constexpr const char* kTransportProfile = "http://opcfoundation.org/UA-Profile/Transport/uatcp-uasc-uabinary";
constexpr std::uint32_t kMaxLifetime = 3600000;
constexpr std::size_t kAuthTokenSize = 32;
constexpr std::size_t kSessionNonceSize = 32;

ResponseHeader respond(const RequestHeader& rq, StatusCode result = status::Good)
{
    ResponseHeader h;
    h.timestamp = DateTime::now();
    h.request_handle = rq.request_handle;
    h.service_result = result;
    return h;
}

ServiceFault fault(const RequestHeader& rq, StatusCode code) { return ServiceFault{respond(rq, code)}; }

std::string tail_after_hash(const std::string& uri)
{
    const auto p = uri.rfind('#');
    return p == std::string::npos ? uri : uri.substr(p + 1);
}

std::string default_policy_id(const UserTokenSpec& spec)
{
    std::string id;
    switch (spec.type) {
    case UserTokenType::Anonymous: id = "anonymous"; break;
    case UserTokenType::UserName: id = "username"; break;
    case UserTokenType::Certificate: id = "certificate"; break;
    case UserTokenType::IssuedToken: id = "issued"; break;
    }
    if (!spec.security_policy_uri.empty()) id += "_" + tail_after_hash(spec.security_policy_uri);
    return id;
}

std::uint8_t security_level(MessageSecurityMode mode)
{
    switch (mode) {
    case MessageSecurityMode::SignAndEncrypt: return 100;
    case MessageSecurityMode::Sign: return 50;
    default: return 0;
    }
}

bool is_secure_mode(MessageSecurityMode m)
{
    return m == MessageSecurityMode::Sign || m == MessageSecurityMode::SignAndEncrypt;
}

// Security policy URI of an OPN chunk, read before anything is verified.
std::string peek_policy_uri(ByteView chunk)
{
    if (chunk.size() < 12) throw CodecError(CodecErrc::Truncated, "OPN chunk too short");
    Reader r(chunk.subspan(12));
    UaString uri;
    decode(r, uri);
    return uri.value_or("");
}

void send_chunks(net::TcpStream& stream, const std::vector<Bytes>& chunks)
{
    for (const auto& c : chunks) stream.send(c);
}

void send_error(net::TcpStream& stream, StatusCode code, const std::string& reason)
{
    try {
        send_chunks(stream, encode_chunks(ErrorMessage{code, reason}, HeaderKind::Raw, nullptr, 0));
    } catch (const std::exception&) {
        // the peer may already be gone; the connection is being closed anyway
    }
}

}  // namespace

std::string security_level_name(MessageSecurityMode mode) { return to_string(mode); }

void validate_config(const ServerConfig& config)
{
    if (config.endpoints.empty()) throw ServerError("server config has no endpoints");
    bool any_secure = false;
    for (const auto& ep : config.endpoints) {
        const bool none_policy = ep.security_policy_uri == pu::None;
        const bool none_mode = ep.mode == MessageSecurityMode::None;
        if (ep.mode == MessageSecurityMode::Invalid) throw ServerError("endpoint with invalid security mode");
        if (none_policy != none_mode)
            throw ServerError("endpoint mode " + std::string(to_string(ep.mode)) + " disagrees with policy " +
                              ep.security_policy_uri);
        if (!none_policy) {
            secchan::suite_for_uri(ep.security_policy_uri);  // throws on unsupported policies
            any_secure = true;
        }
        for (const auto& t : ep.user_token_policies) {
            if (!t.security_policy_uri.empty() && t.security_policy_uri != pu::None)
                secchan::suite_for_uri(t.security_policy_uri);
            if (t.type == UserTokenType::UserName && !t.security_policy_uri.empty() &&
                t.security_policy_uri != pu::None && !config.identity)
                throw ServerError("encrypted UserName token policy needs a server identity");
        }
        if (!ep.endpoint_url.empty()) net::parse_endpoint_url(ep.endpoint_url);
    }
    if (any_secure && !config.identity) throw ServerError("secure endpoint configured without a server identity");
    if (config.identity && config.identity->certificate.key_bits() < 2048)
        throw ServerError("server identity key is shorter than 2048 bits");
    if (!config.trust_store) throw ServerError("server config has no trust store");
    if (!config.nodes) throw ServerError("server config has no node store");
}

class Server::Connection {
public:
    explicit Connection(net::TcpStream s) : stream(std::move(s)) {}
    net::TcpStream stream;
    std::atomic<bool> done{false};
};

// Protocol state for one accepted connection.
class ConnectionHandler {
public:
    ConnectionHandler(Server& server, net::TcpStream& stream) : server_(server), cfg_(server.config_), stream_(stream)
    {
    }

    void run();

private:
    bool handshake();
    bool handle_open(ByteView chunk);
    bool handle_message(ByteView chunk, bool closing);
    ServiceBody dispatch(ServiceBody& request);

    ServiceBody create_session(CreateSessionRequest& rq);
    ServiceBody activate_session(ActivateSessionRequest& rq);
    ServiceBody read(ReadRequest& rq, SessionInfo& session);
    ServiceBody write(WriteRequest& rq, SessionInfo& session);

    const EndpointDescriptor* channel_endpoint() const;
    SessionInfo* find_session(const NodeId& token);
    template <class F>
    void count(F&& f)
    {
        std::lock_guard lock(server_.mutex_);
        f(server_.stats_);
    }

    Server& server_;
    const ServerConfig& cfg_;
    net::TcpStream& stream_;
    ChunkLimits limits_;
    std::optional<secchan::SecureMessenger> messenger_;
    ChannelInfo channel_;
    std::vector<SessionInfo> sessions_;
};

void ConnectionHandler::run()
{
    limits_ = cfg_.limits;
    try {
        if (!handshake()) return;
        for (;;) {
            const Bytes chunk = stream_.read_chunk(limits_.max_chunk_size);
            const auto header = parse_message_header(chunk);
            bool keep = false;
            switch (header.type) {
            case MessageType::Open: keep = handle_open(chunk); break;
            case MessageType::Message: keep = handle_message(chunk, false); break;
            case MessageType::Close: handle_message(chunk, true); break;
            default: send_error(stream_, status::BadTcpMessageTypeInvalid, "unexpected message type"); break;
            }
            if (!keep) return;
        }
    } catch (const net::NetError& e) {
        if (e.code() == net::NetErrc::FrameInvalid) send_error(stream_, status::BadTcpMessageTooLarge, e.what());
    } catch (const CodecError& e) {
        send_error(stream_, status::BadDecodingError, e.what());
    } catch (const std::exception& e) {
        send_error(stream_, status::BadInternalError, e.what());
    }
}

bool ConnectionHandler::handshake()
{
    const Bytes chunk = stream_.read_chunk(limits_.max_chunk_size);
    const Chunk parsed = parse_chunk(chunk);
    if (parsed.header.type != MessageType::Hello) {
        send_error(stream_, status::BadTcpMessageTypeInvalid, "expected HEL");
        return false;
    }
    const auto hello = std::get<HelloMessage>(decode_body(MessageType::Hello, parsed.body));
    AcknowledgeMessage ack;
    auto clamp = [](std::uint32_t ours, std::uint32_t theirs) {
        return theirs == 0 ? ours : std::max(kMinChunkSize, std::min(ours, theirs));
    };
    const std::uint32_t send_size = clamp(limits_.max_chunk_size, hello.receive_buffer_size);
    const std::uint32_t recv_size = clamp(limits_.max_chunk_size, hello.send_buffer_size);
    ack.receive_buffer_size = recv_size;
    ack.send_buffer_size = send_size;
    ack.max_message_size = 0;
    ack.max_chunk_count = limits_.max_chunk_count;
    if (hello.max_chunk_count != 0) limits_.max_chunk_count = std::min(limits_.max_chunk_count, hello.max_chunk_count);
    limits_.max_chunk_size = send_size;
    send_chunks(stream_, encode_chunks(ack, HeaderKind::Raw, nullptr, 0));
    return true;
}

bool ConnectionHandler::handle_open(ByteView chunk)
{
    if (messenger_) {
        send_error(stream_, status::BadTcpMessageTypeInvalid, "secure channel renewal is not supported");
        return false;
    }
    const std::string policy = peek_policy_uri(chunk);
    const bool none_policy = policy == pu::None;
    if (!none_policy && !std::any_of(cfg_.endpoints.begin(), cfg_.endpoints.end(),
                                     [&](const EndpointDescriptor& e) { return e.security_policy_uri == policy; })) {
        count([](ServerStats& s) { ++s.channels_rejected; });
        send_error(stream_, status::BadSecurityPolicyRejected, "security policy not offered: " + policy);
        return false;
    }

    static const pki::Identity kNoIdentity;
    const pki::Identity& own = cfg_.identity ? *cfg_.identity : kNoIdentity;
    const auto trust = [this](const pki::CertificateRecord& cert) {
        return pki::validate_peer(cert, cfg_.trust_policy, *cfg_.trust_store);
    };

    secchan::OpenedChunk opened;
    try {
        opened = secchan::unprotect_open_secure_channel(chunk, own, trust);
    } catch (const secchan::SecError& e) {
        count([](ServerStats& s) { ++s.channels_rejected; });
        send_error(stream_, e.status(), e.what());
        return false;
    }

    const Bytes plain = std::move(opened.chunk);
    const Reassembled msg = reassemble(std::span<const Bytes>(&plain, 1));
    const auto* req = std::get_if<OpenSecureChannelRequest>(&msg.body);
    if (!req) {
        send_error(stream_, status::BadTcpMessageTypeInvalid, "OPN chunk does not carry an OpenSecureChannelRequest");
        return false;
    }
    const bool mode_ok = none_policy ? req->security_mode == MessageSecurityMode::None
                                     : std::any_of(cfg_.endpoints.begin(), cfg_.endpoints.end(),
                                                   [&](const EndpointDescriptor& e) {
                                                       return e.security_policy_uri == policy &&
                                                              e.mode == req->security_mode;
                                                   });
    if (!mode_ok) {
        count([](ServerStats& s) { ++s.channels_rejected; });
        send_error(stream_, status::BadSecurityModeRejected,
                   std::string("security mode not offered: ") + to_string(req->security_mode));
        return false;
    }
    const Bytes client_nonce = req->client_nonce.value_or(Bytes{});
    if (!none_policy && client_nonce.size() != opened.suite->nonce_length) {
        send_error(stream_, status::BadNonceInvalid, "client nonce has the wrong length");
        return false;
    }

    secchan::SecureChannelState st;
    st.channel_id = server_.next_channel_id_.fetch_add(1);
    st.token_id = 1;
    st.suite = opened.suite;
    st.mode = req->security_mode;
    st.local_nonce = none_policy ? Bytes{} : secchan::fresh_nonce(*opened.suite);
    st.remote_nonce = client_nonce;
    st.recv_sequence = msg.sequence.sequence_number;
    if (!none_policy) {
        st.local = own;
        st.remote = opened.sender;
    }
    st.establish_keys();

    OpenSecureChannelResponse resp;
    resp.response_header = respond(req->request_header);
    resp.security_token.channel_id = st.channel_id;
    resp.security_token.token_id = st.token_id;
    resp.security_token.created_at = DateTime::now();
    resp.security_token.revised_lifetime =
        req->requested_lifetime == 0 ? kMaxLifetime : std::min(req->requested_lifetime, kMaxLifetime);
    resp.server_nonce = st.local_nonce;

    ChannelFraming framing;
    framing.secure_channel_id = st.channel_id;
    framing.asymmetric = secchan::asymmetric_header(*st.suite, none_policy ? nullptr : &own,
                                                    none_policy ? nullptr : &*opened.sender);
    framing.next_sequence_number = st.send_sequence;
    auto chunks = encode_chunks(resp, HeaderKind::Asymmetric, &framing, msg.sequence.request_id, limits_);
    if (!none_policy)
        for (auto& c : chunks)
            c = secchan::protect_open_secure_channel(c, own, *opened.sender, *st.suite, limits_.max_chunk_size);
    st.send_sequence = framing.next_sequence_number;
    send_chunks(stream_, chunks);

    channel_.channel_id = st.channel_id;
    channel_.mode = st.mode;
    channel_.security_policy_uri = policy;
    channel_.client_certificate = none_policy ? std::nullopt : opened.sender;
    messenger_.emplace(std::move(st), limits_);
    {
        std::lock_guard lock(server_.mutex_);
        ++server_.stats_.channels_opened;
        if (!none_policy) ++server_.stats_.secure_channels_opened;
        server_.channels_.push_back(channel_);
    }
    if (cfg_.on_channel_open) cfg_.on_channel_open(channel_, messenger_->state());
    return true;
}

bool ConnectionHandler::handle_message(ByteView chunk, bool closing)
{
    if (!messenger_) {
        send_error(stream_, status::BadTcpSecureChannelUnknown, "no secure channel is open");
        return false;
    }
    std::optional<Reassembled> msg;
    try {
        msg = messenger_->open(chunk);
    } catch (const secchan::SecError& e) {
        send_error(stream_, e.status(), e.what());
        return false;
    } catch (const CodecError& e) {
        if (closing) return false;
        if (e.code() == CodecErrc::AbortReceived) return true;
        if (e.code() == CodecErrc::BodyTooLarge) {
            send_error(stream_, status::BadTcpMessageTooLarge, e.what());
            return false;
        }
        send_chunks(stream_, messenger_->seal(fault(RequestHeader{}, status::BadDecodingError),
                                              messenger_->last_request_id()));
        return true;
    }
    if (closing) return false;
    if (!msg) return true;
    ServiceBody response = dispatch(msg->body);
    send_chunks(stream_, messenger_->seal(response, msg->sequence.request_id));
    return true;
}

const EndpointDescriptor* ConnectionHandler::channel_endpoint() const
{
    for (const auto& e : cfg_.endpoints)
        if (e.mode == channel_.mode && e.security_policy_uri == channel_.security_policy_uri) return &e;
    return nullptr;
}

SessionInfo* ConnectionHandler::find_session(const NodeId& token)
{
    for (auto& s : sessions_)
        if (s.authentication_token == token) return &s;
    return nullptr;
}

ServiceBody ConnectionHandler::dispatch(ServiceBody& request)
{
    if (auto* unknown = std::get_if<UnknownService>(&request)) {
        RequestHeader header;
        try {
            header = split_request_header(*unknown).first;
        } catch (const CodecError&) {
            return fault(RequestHeader{}, status::BadDecodingError);
        }
        if (cfg_.intercept) {
            SessionInfo* session = find_session(header.authentication_token);
            ServiceCall call{channel_, session && session->activated ? session : nullptr, request};
            if (auto replaced = cfg_.intercept(call)) return std::move(*replaced);
        }
        return fault(header, status::BadServiceUnsupported);
    }
    const RequestHeader* rh = request_header_of(request);
    if (!rh) return fault(RequestHeader{}, status::BadServiceUnsupported);
    const RequestHeader header = *rh;

    if (std::holds_alternative<FindServersRequest>(request))
        return FindServersResponse{respond(header), {server_.application_description()}};
    if (std::holds_alternative<GetEndpointsRequest>(request))
        return GetEndpointsResponse{respond(header), server_.endpoint_descriptions()};
    if (auto* cs = std::get_if<CreateSessionRequest>(&request)) return create_session(*cs);
    if (auto* as = std::get_if<ActivateSessionRequest>(&request)) return activate_session(*as);
    if (std::holds_alternative<CloseSessionRequest>(request)) {
        auto it = std::find_if(sessions_.begin(), sessions_.end(), [&](const SessionInfo& s) {
            return s.authentication_token == header.authentication_token;
        });
        if (it == sessions_.end()) return fault(header, status::BadSessionIdInvalid);
        sessions_.erase(it);
        return CloseSessionResponse{respond(header)};
    }

    SessionInfo* session = find_session(header.authentication_token);
    SessionInfo* active = session && session->activated ? session : nullptr;
    const bool attribute_service =
        std::holds_alternative<ReadRequest>(request) || std::holds_alternative<WriteRequest>(request);
    if (attribute_service && !active)
        return fault(header, session ? status::BadSessionNotActivated : status::BadSessionIdInvalid);

    if (cfg_.intercept) {
        ServiceCall call{channel_, active, request};
        if (auto replaced = cfg_.intercept(call)) return std::move(*replaced);
    }
    if (auto* r = std::get_if<ReadRequest>(&request)) return read(*r, *active);
    if (auto* w = std::get_if<WriteRequest>(&request)) return write(*w, *active);
    return fault(header, status::BadServiceUnsupported);
}

ServiceBody ConnectionHandler::create_session(CreateSessionRequest& rq)
{
    const RequestHeader& h = rq.request_header;
    const bool secure = is_secure_mode(channel_.mode);
    if (!channel_endpoint()) return fault(h, status::BadSecurityModeRejected);
    const Bytes client_nonce = rq.client_nonce.value_or(Bytes{});
    if (secure) {
        const auto& cert = *channel_.client_certificate;
        if (rq.client_certificate && *rq.client_certificate != cert.der) return fault(h, status::BadCertificateInvalid);
        if (rq.client_description.application_uri.value_or("") != cert.application_uri)
            return fault(h, status::BadCertificateUriInvalid);
        if (client_nonce.size() < kSessionNonceSize) return fault(h, status::BadNonceInvalid);
    }

    SessionInfo s;
    s.session_id = NodeId::numeric(1, server_.next_session_id_.fetch_add(1));
    s.authentication_token = NodeId::opaque(0, random_bytes(kAuthTokenSize));
    s.server_nonce = random_bytes(kSessionNonceSize);
    s.client_nonce = client_nonce;
    s.client_description = rq.client_description;
    if (secure) s.client_certificate = channel_.client_certificate;

    CreateSessionResponse resp;
    resp.response_header = respond(h);
    resp.session_id = s.session_id;
    resp.authentication_token = s.authentication_token;
    resp.revised_session_timeout = std::clamp(rq.requested_session_timeout, 10000.0, 3600000.0);
    resp.server_nonce = s.server_nonce;
    if (cfg_.identity) resp.server_certificate = cfg_.identity->certificate.der;
    resp.server_endpoints = server_.endpoint_descriptions();
    if (secure) {
        resp.server_signature.algorithm = std::string(secchan::kRsaSha256Uri);
        resp.server_signature.signature =
            secchan::sign_session(cfg_.identity->key, channel_.client_certificate->der, client_nonce);
    }
    sessions_.push_back(std::move(s));
    count([](ServerStats& st) { ++st.sessions_created; });
    return resp;
}

ServiceBody ConnectionHandler::activate_session(ActivateSessionRequest& rq)
{
    const RequestHeader& h = rq.request_header;
    SessionInfo* session = find_session(h.authentication_token);
    if (!session) return fault(h, status::BadSessionIdInvalid);
    const auto failed = [&](StatusCode code) -> ServiceBody {
        count([](ServerStats& st) { ++st.activation_failures; });
        return fault(h, code);
    };

    if (is_secure_mode(channel_.mode)) {
        const auto& sig = rq.client_signature.signature;
        if (!sig || !secchan::verify_session(*channel_.client_certificate, cfg_.identity->certificate.der,
                                             session->server_nonce, *sig))
            return failed(status::BadApplicationSignatureInvalid);
    }

    const EndpointDescriptor* ep = channel_endpoint();
    const auto& tok = rq.user_identity_token;
    const auto* type_id = std::get_if<std::uint32_t>(&tok.type_id.identifier);
    if (!type_id || tok.type_id.namespace_index != 0 || !tok.body) return failed(status::BadIdentityTokenInvalid);

    UserTokenType type{};
    std::string policy_id;
    std::string user_name;
    std::string password;
    bool encrypted = false;
    std::string encryption_algorithm;
    try {
        switch (*type_id) {
        case encoding_id::AnonymousIdentityToken: {
            type = UserTokenType::Anonymous;
            policy_id = decode_exact<AnonymousIdentityToken>(*tok.body).policy_id.value_or("");
            break;
        }
        case encoding_id::UserNameIdentityToken: {
            type = UserTokenType::UserName;
            auto t = decode_exact<UserNameIdentityToken>(*tok.body);
            policy_id = t.policy_id.value_or("");
            user_name = t.user_name.value_or("");
            encryption_algorithm = t.encryption_algorithm.value_or("");
            password.assign(t.password ? t.password->begin() : Bytes::const_iterator{},
                            t.password ? t.password->end() : Bytes::const_iterator{});
            break;
        }
        case encoding_id::X509IdentityToken: return failed(status::BadIdentityTokenRejected);
        default: return failed(status::BadIdentityTokenInvalid);
        }
    } catch (const CodecError&) {
        return failed(status::BadIdentityTokenInvalid);
    }

    const UserTokenSpec* spec = nullptr;
    for (const auto& t : ep->user_token_policies) {
        if (t.type != type) continue;
        const std::string id = t.policy_id.empty() ? default_policy_id(t) : t.policy_id;
        if (policy_id.empty() || id == policy_id) {
            spec = &t;
            break;
        }
    }
    if (!spec) return failed(status::BadIdentityTokenRejected);

    std::string secret_policy{pu::None};
    if (type == UserTokenType::UserName) {
        const std::string token_policy =
            spec->security_policy_uri.empty() ? channel_.security_policy_uri : spec->security_policy_uri;
        if (!encryption_algorithm.empty()) {
            if (encryption_algorithm != secchan::kRsaOaepUri || !cfg_.identity)
                return failed(status::BadIdentityTokenInvalid);
            try {
                password = secchan::decrypt_password_token(to_bytes(password), cfg_.identity->key,
                                                           session->server_nonce);
            } catch (const secchan::SecError& e) {
                return failed(e.code() == secchan::SecErrc::NonceMismatch ? status::BadNonceInvalid
                                                                          : status::BadIdentityTokenInvalid);
            }
            encrypted = true;
            // Basic256Sha256 is the only suite that can decrypt, whatever the channel says
            secret_policy = token_policy == pu::None ? std::string(pu::Basic256Sha256) : token_policy;
        } else if (token_policy != pu::None) {
            return failed(status::BadIdentityTokenInvalid);
        }
    }

    AuthRequest auth{channel_, *session, type, user_name, password, encrypted, secret_policy};
    StatusCode verdict;
    if (cfg_.authenticate) {
        verdict = cfg_.authenticate(auth);
    } else if (type == UserTokenType::Anonymous) {
        verdict = cfg_.anonymous_allowed ? status::Good : status::BadIdentityTokenRejected;
    } else {
        auto it = cfg_.users.find(user_name);
        verdict = it != cfg_.users.end() && it->second == password ? status::Good : status::BadUserAccessDenied;
    }
    if (verdict.bad()) return failed(verdict);

    session->activated = true;
    session->user = type == UserTokenType::Anonymous ? std::nullopt : std::optional<std::string>(user_name);
    session->server_nonce = random_bytes(kSessionNonceSize);
    count([](ServerStats& st) { ++st.sessions_activated; });
    ActivateSessionResponse resp;
    resp.response_header = respond(h);
    resp.server_nonce = session->server_nonce;
    return resp;
}

ServiceBody ConnectionHandler::read(ReadRequest& rq, SessionInfo&)
{
    if (rq.nodes_to_read.empty()) return fault(rq.request_header, status::BadNothingToDo);
    ReadResponse resp;
    resp.response_header = respond(rq.request_header);
    for (const auto& n : rq.nodes_to_read) {
        if (n.attribute_id != kAttributeValue) {
            DataValue dv;
            dv.status = status::BadAttributeIdInvalid;
            resp.results.push_back(dv);
            continue;
        }
        resp.results.push_back(cfg_.nodes->read(n.node_id));
    }
    count([](ServerStats& st) { ++st.reads; });
    return resp;
}

ServiceBody ConnectionHandler::write(WriteRequest& rq, SessionInfo&)
{
    if (rq.nodes_to_write.empty()) return fault(rq.request_header, status::BadNothingToDo);
    WriteResponse resp;
    resp.response_header = respond(rq.request_header);
    for (const auto& n : rq.nodes_to_write) {
        if (n.attribute_id != kAttributeValue)
            resp.results.push_back(status::BadAttributeIdInvalid);
        else if (!n.value.value)
            resp.results.push_back(status::BadTypeMismatch);
        else
            resp.results.push_back(cfg_.nodes->write(n.node_id, *n.value.value));
    }
    count([](ServerStats& st) { ++st.writes; });
    return resp;
}

Server::Server(ServerConfig config) : config_(std::move(config)) {}

std::unique_ptr<Server> Server::start(ServerConfig config)
{
    validate_config(config);
    std::unique_ptr<Server> server(new Server(std::move(config)));
    server->listener_ = net::TcpListener::bind(server->config_.host, server->config_.port);
    server->port_ = server->listener_.port();
    for (auto& ep : server->config_.endpoints)
        if (ep.endpoint_url.empty()) ep.endpoint_url = server->url();
    server->acceptor_ = std::thread([s = server.get()] { s->accept_loop(); });
    return server;
}

Server::~Server() { stop(); }

void Server::stop()
{
    if (stopping_.exchange(true)) return;
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();
    std::vector<std::thread> handlers;
    {
        std::lock_guard lock(mutex_);
        for (auto& c : connections_) c->stream.shutdown();
        handlers.swap(handlers_);
    }
    for (auto& t : handlers) t.join();
    std::lock_guard lock(mutex_);
    connections_.clear();
}

std::string Server::url() const { return net::make_endpoint_url(config_.host, port_); }

void Server::accept_loop()
{
    while (!stopping_) {
        auto stream = listener_.accept(net::Millis(100));
        if (!stream) continue;
        stream->set_timeout(config_.io_timeout);
        if (config_.transcript) stream->attach_transcript(config_.transcript);
        auto conn = std::make_shared<Connection>(std::move(*stream));
        std::lock_guard lock(mutex_);
        if (stopping_) {
            conn->stream.shutdown();
            break;
        }
        ++stats_.connections;
        // reap handlers whose connection already finished
        for (std::size_t i = 0; i < connections_.size();) {
            if (connections_[i]->done) {
                handlers_[i].join();
                handlers_.erase(handlers_.begin() + static_cast<std::ptrdiff_t>(i));
                connections_.erase(connections_.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
                ++i;
            }
        }
        connections_.push_back(conn);
        handlers_.emplace_back([this, conn] { serve_connection(conn); });
    }
}

void Server::serve_connection(const std::shared_ptr<Connection>& conn)
{
    ConnectionHandler handler(*this, conn->stream);
    handler.run();
    conn->stream.shutdown();
    conn->done = true;
}

codec::ApplicationDescription Server::application_description() const
{
    ApplicationDescription d;
    d.application_uri = config_.application.application_uri;
    d.product_uri = config_.application.product_uri;
    d.application_name = LocalizedText::of(config_.application.application_name);
    d.application_type = ApplicationType::Server;
    std::vector<UaString> urls;
    for (const auto& ep : config_.endpoints)
        if (std::find(urls.begin(), urls.end(), UaString(ep.endpoint_url)) == urls.end())
            urls.emplace_back(ep.endpoint_url);
    d.discovery_urls = std::move(urls);
    return d;
}

std::vector<codec::EndpointDescription> Server::endpoint_descriptions() const
{
    std::vector<EndpointDescription> out;
    const auto app = application_description();
    for (const auto& ep : config_.endpoints) {
        EndpointDescription d;
        d.endpoint_url = ep.endpoint_url;
        d.server = app;
        if (ep.mode != MessageSecurityMode::None && config_.identity) d.server_certificate = config_.identity->certificate.der;
        d.security_mode = ep.mode;
        d.security_policy_uri = ep.security_policy_uri;
        for (const auto& t : ep.user_token_policies) {
            UserTokenPolicy p;
            p.policy_id = t.policy_id.empty() ? default_policy_id(t) : t.policy_id;
            p.token_type = t.type;
            if (!t.security_policy_uri.empty()) p.security_policy_uri = t.security_policy_uri;
            d.user_identity_tokens.push_back(std::move(p));
        }
        d.transport_profile_uri = std::string(kTransportProfile);
        d.security_level = security_level(ep.mode);
        out.push_back(std::move(d));
    }
    return out;
}

ServerStats Server::stats() const
{
    std::lock_guard lock(mutex_);
    return stats_;
}

std::vector<ChannelInfo> Server::opened_channels() const
{
    std::lock_guard lock(mutex_);
    return channels_;
}

}  // namespace uatrust::server
