#include "uatrust/secchan/messenger.hpp"

namespace uatrust::secchan {

SecureMessenger::SecureMessenger(SecureChannelState state, codec::ChunkLimits limits)
    : state_(std::move(state)), limits_(limits)
{
    limits_.trailer_reserve = symmetric_trailer_reserve(state_);
}

std::vector<Bytes> SecureMessenger::seal(const codec::ServiceBody& body, std::uint32_t request_id)
{
    codec::ChannelFraming framing;
    framing.secure_channel_id = state_.channel_id;
    framing.token_id = state_.token_id;
    framing.next_sequence_number = state_.send_sequence;
    auto chunks = codec::encode_chunks(body, codec::HeaderKind::Symmetric, &framing, request_id, limits_);
    for (auto& c : chunks) c = protect_chunk(c, state_);
    state_.send_sequence = framing.next_sequence_number;
    return chunks;
}

std::optional<codec::Reassembled> SecureMessenger::open(ByteView chunk)
{
    Bytes plain = unprotect_chunk(chunk, state_);
    const auto header = codec::parse_message_header(plain);
    const std::size_t seq = codec::sequence_header_offset(plain);
    if (plain.size() >= seq + codec::kSequenceHeaderSize) {
        codec::Reader r(ByteView(plain).subspan(seq + 4, 4));
        last_request_id_ = r.u32();
    }
    if (header.flag == codec::ChunkFlag::Abort) {
        pending_.clear();
        throw codec::CodecError(codec::CodecErrc::AbortReceived, "peer aborted message");
    }
    pending_.push_back(std::move(plain));
    if (header.flag == codec::ChunkFlag::Intermediate) {
        if (limits_.max_chunk_count && pending_.size() >= limits_.max_chunk_count) {
            pending_.clear();
            throw codec::CodecError(codec::CodecErrc::BodyTooLarge, "too many chunks in one message");
        }
        return std::nullopt;
    }
    std::vector<Bytes> chunks = std::move(pending_);
    pending_.clear();
    return codec::reassemble(chunks);
}

}  // namespace uatrust::secchan
