#pragma once

// Connects to a target with a certificate the target has never seen and, wherever the
// channel is accepted, tries to read and write process data.

#include "uatrust/attacks/outcome.hpp"
#include "uatrust/attacks/target.hpp"

namespace uatrust::attacks {

struct RogueClientOptions {
    // Supplied credentials, tried when Anonymous is refused or not offered.
    std::optional<client::UserIdentity> credentials;
    // Defaults to a fresh self-signed certificate. A clone of a legitimate client can be
    // passed to impersonate it.
    std::optional<pki::Identity> identity;
    // There is no Browse in the supported service subset, so the node list is configured.
    std::vector<codec::NodeId> nodes;  // default: the harness node set
    std::optional<codec::NodeId> write_probe;  // default: the harness setpoint
    // Value written by the probe; by default the value just read is written back.
    std::optional<codec::Variant> write_value;
    // Stop after the first endpoint that yielded an activated session.
    bool stop_after_first_session = true;
    net::Millis timeout{5000};
    std::string transcript_label = "rogue-client";
};

// Never throws for target behavior: rejections become attempts, failures Inconclusive.
AttackOutcome rogue_client(const TargetDescriptor& target, const RogueClientOptions& options = {});

// A fresh self-signed attacker identity, unrelated to any victim.
pki::Identity fresh_attacker_identity();

}  // namespace uatrust::attacks
