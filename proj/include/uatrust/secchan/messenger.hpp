#pragma once

#include "uatrust/secchan/protect.hpp"

namespace uatrust::secchan {

// Turns service bodies into protected MSG/CLO chunks and back for one established channel.
class SecureMessenger {
public:
    explicit SecureMessenger(SecureChannelState state, codec::ChunkLimits limits = {});

    SecureChannelState& state() { return state_; }
    const SecureChannelState& state() const { return state_; }
    const codec::ChunkLimits& limits() const { return limits_; }

    std::vector<Bytes> seal(const codec::ServiceBody& body, std::uint32_t request_id);

    // Feeds one protected chunk; returns the message once its final chunk has arrived.
    // Errors: any SecError from unprotect_chunk, and CodecError from reassembly.
    std::optional<codec::Reassembled> open(ByteView chunk);

    // Request id of the most recent chunk that passed unprotect, so a body that fails to decode
    // can still be answered.
    std::uint32_t last_request_id() const { return last_request_id_; }

private:
    SecureChannelState state_;
    codec::ChunkLimits limits_;
    std::vector<Bytes> pending_;
    std::uint32_t last_request_id_ = 0;
};

}  // namespace uatrust::secchan
