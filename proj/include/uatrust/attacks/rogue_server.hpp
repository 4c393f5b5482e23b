#pragma once

// A clone of a discovered server: same application description, endpoints and token
// policies, a look-alike certificate, and no trust checks of its own. UserName tokens are
// decrypted and kept; reads are answered with fabricated values.

#include "uatrust/attacks/outcome.hpp"
#include "uatrust/attacks/target.hpp"
#include "uatrust/server/server.hpp"

#include <condition_variable>

namespace uatrust::attacks {

// Value served for a read. last_real is the latest value relayed from the real server, if any.
using ValueGenerator =
    std::function<codec::DataValue(const codec::NodeId& node, const std::optional<codec::DataValue>& last_real)>;

// last_real when present, else the constant.
ValueGenerator default_generator(codec::Variant constant = codec::Variant(0.0));

struct RogueServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    // Defaults to clone_certificate of the target certificate.
    std::optional<pki::Identity> identity;
    ValueGenerator generator;  // default_generator() when empty
    // Advertise the target's endpoint URLs (traffic is assumed to be redirected to us) or our own.
    bool advertise_target_urls = true;
    std::shared_ptr<net::Transcript> transcript;
    std::function<void(const CapturedCredential&)> on_credential;

    // Hooks for the middleperson. A set hook replaces the corresponding default behavior.
    server::AuthenticateHook authenticate;  // runs after the credential has been recorded
    server::ServiceInterceptor intercept;   // runs before fabrication; nullopt falls through
};

class RogueServer {
public:
    // Errors: net::NetError(BindFailed), server::ServerError when nothing in the target is servable.
    static std::unique_ptr<RogueServer> start(const TargetDescriptor& target, RogueServerOptions options = {});
    ~RogueServer();

    void stop();
    std::string url() const { return server_->url(); }
    std::uint16_t port() const { return server_->port(); }
    const pki::Identity& identity() const { return identity_; }
    server::Server& server() { return *server_; }

    std::vector<CapturedCredential> credentials() const;
    std::optional<CapturedCredential> wait_for_credential(net::Millis timeout) const;

    // Remembers a value seen on the real server for the generator.
    void observe_real(const codec::NodeId& node, const codec::DataValue& value);

    // Evidence gathered so far. Vulnerable once a victim accepted our certificate or handed
    // over credentials.
    AttackOutcome outcome() const;

private:
    RogueServer() = default;
    std::optional<codec::ServiceBody> handle(server::ServiceCall& call);
    StatusCode authenticate(const server::AuthRequest& request);
    void channel_opened(const server::ChannelInfo& channel);

    RogueServerOptions options_;
    pki::Identity identity_;
    std::unique_ptr<server::Server> server_;
    mutable std::mutex mutex_;
    mutable std::condition_variable captured_;
    AttackOutcome outcome_;
    std::map<codec::NodeId, codec::DataValue> last_real_;
};

// The server configuration the clone runs with. Endpoints whose policy is not implemented
// here are dropped.
server::ServerConfig clone_server_config(const TargetDescriptor& target, const pki::Identity& identity,
                                         bool advertise_target_urls);

}  // namespace uatrust::attacks
