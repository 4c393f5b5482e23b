#pragma once

// UA-TCP chunk framing: message header, security headers, sequence header, and splitting of
// encoded bodies across chunks. Chunks produced here are not cryptographically protected.

#include "uatrust/codec/messages.hpp"

#include <span>

namespace uatrust::codec {

enum class ChunkFlag : char { Final = 'F', Intermediate = 'C', Abort = 'A' };

inline constexpr std::size_t kMessageHeaderSize = 8;
inline constexpr std::size_t kSequenceHeaderSize = 8;
inline constexpr std::uint32_t kMinChunkSize = 8192;
inline constexpr std::uint32_t kDefaultChunkSize = 65536;
inline constexpr std::uint32_t kDefaultMaxChunkCount = 64;

struct MessageHeader {
    MessageType type = MessageType::Message;
    ChunkFlag flag = ChunkFlag::Final;
    std::uint32_t message_size = 0;

    friend bool operator==(const MessageHeader&, const MessageHeader&) = default;
};

struct AsymmetricSecurityHeader {
    UaString security_policy_uri;
    UaByteString sender_certificate;
    UaByteString receiver_certificate_thumbprint;

    UATRUST_FIELDS(security_policy_uri, sender_certificate, receiver_certificate_thumbprint)
    friend bool operator==(const AsymmetricSecurityHeader&, const AsymmetricSecurityHeader&) = default;
};

struct SymmetricSecurityHeader {
    std::uint32_t token_id = 0;

    UATRUST_FIELDS(token_id)
    friend bool operator==(const SymmetricSecurityHeader&, const SymmetricSecurityHeader&) = default;
};

struct SequenceHeader {
    std::uint32_t sequence_number = 0;
    std::uint32_t request_id = 0;

    UATRUST_FIELDS(sequence_number, request_id)
    friend bool operator==(const SequenceHeader&, const SequenceHeader&) = default;
};

enum class HeaderKind { Raw, Asymmetric, Symmetric };

HeaderKind header_kind_of(MessageType type);

// The per-channel facts the chunker needs. next_sequence_number is consumed by encode_chunks.
struct ChannelFraming {
    std::uint32_t secure_channel_id = 0;
    std::uint32_t token_id = 0;
    AsymmetricSecurityHeader asymmetric;
    std::uint32_t next_sequence_number = 1;
};

struct ChunkLimits {
    std::uint32_t max_chunk_size = kDefaultChunkSize;
    std::uint32_t max_chunk_count = kDefaultMaxChunkCount;
    // Bytes kept free in every chunk for the padding and signature added by message security.
    std::size_t trailer_reserve = 0;
};

// A decoded, unprotected chunk.
struct Chunk {
    MessageHeader header;
    std::uint32_t secure_channel_id = 0;
    std::optional<AsymmetricSecurityHeader> asymmetric;
    std::optional<SymmetricSecurityHeader> symmetric;
    std::optional<SequenceHeader> sequence;
    Bytes body;
};

// Validates type tag, chunk flag and message_size >= 8. Needs at least 8 bytes (else Truncated).
MessageHeader parse_message_header(ByteView bytes);
void write_message_size(Bytes& chunk, std::uint32_t size);

// Offset of the sequence header in an OPN/MSG/CLO chunk (i.e. the end of the security header).
std::size_t sequence_header_offset(ByteView chunk);

// Parses an unprotected chunk; message_size must equal bytes.size().
Chunk parse_chunk(ByteView bytes);

std::size_t body_capacity(HeaderKind kind, const ChannelFraming* channel, const ChunkLimits& limits);

// Errors: BodyTooLarge when the chunk count would exceed limits.max_chunk_count (or a raw body
// does not fit one chunk). Throws std::invalid_argument on a header kind that does not match the
// body, a missing channel for secured kinds, or max_chunk_size below 8192.
std::vector<Bytes> encode_chunks(const ServiceBody& body, HeaderKind kind, ChannelFraming* channel,
                                 std::uint32_t request_id, const ChunkLimits& limits = {});

struct Reassembled {
    ServiceBody body;
    SequenceHeader sequence;  // of the first chunk
    MessageType type = MessageType::Message;
    std::uint32_t secure_channel_id = 0;
    std::optional<AsymmetricSecurityHeader> asymmetric;
    std::uint32_t token_id = 0;
};

// Errors: SequenceGap, MixedRequestIds, AbortReceived, plus Malformed for inconsistent headers or
// flags and any body decoding error.
Reassembled reassemble(std::span<const Bytes> chunks);

}  // namespace uatrust::codec
