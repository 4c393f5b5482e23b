#include "uatrust/codec/chunking.hpp"

namespace uatrust::codec {

HeaderKind header_kind_of(MessageType type)
{
    switch (type) {
    case MessageType::Open: return HeaderKind::Asymmetric;
    case MessageType::Message:
    case MessageType::Close: return HeaderKind::Symmetric;
    default: return HeaderKind::Raw;
    }
}

MessageHeader parse_message_header(ByteView bytes)
{
    if (bytes.size() < kMessageHeaderSize) throw CodecError(CodecErrc::Truncated, "message header");
    auto type = message_type_from_tag(bytes.first(3));
    if (!type) throw CodecError(CodecErrc::Malformed, "unknown message type tag");
    MessageHeader h;
    h.type = *type;
    const char flag = static_cast<char>(bytes[3]);
    if (flag != 'F' && flag != 'C' && flag != 'A') throw CodecError(CodecErrc::Malformed, "chunk flag");
    // connection-protocol messages are never split
    if (header_kind_of(h.type) == HeaderKind::Raw && flag != 'F')
        throw CodecError(CodecErrc::Malformed, "chunked connection-protocol message");
    h.flag = static_cast<ChunkFlag>(flag);
    Reader r(bytes.subspan(4, 4));
    h.message_size = r.u32();
    if (h.message_size < kMessageHeaderSize) throw CodecError(CodecErrc::Malformed, "message_size below 8");
    return h;
}

void write_message_size(Bytes& chunk, std::uint32_t size)
{
    for (int i = 0; i < 4; ++i) chunk.at(4 + i) = static_cast<std::uint8_t>(size >> (8 * i));
}

std::size_t sequence_header_offset(ByteView chunk)
{
    const auto header = parse_message_header(chunk);
    Reader r(chunk);
    r.take(kMessageHeaderSize);
    switch (header_kind_of(header.type)) {
    case HeaderKind::Raw: throw CodecError(CodecErrc::Malformed, "connection-protocol chunk has no security header");
    case HeaderKind::Asymmetric: {
        r.u32();
        AsymmetricSecurityHeader asym;
        decode(r, asym);
        break;
    }
    case HeaderKind::Symmetric:
        r.u32();
        r.u32();
        break;
    }
    return r.position();
}

Chunk parse_chunk(ByteView bytes)
{
    Chunk c;
    c.header = parse_message_header(bytes);
    if (c.header.message_size != bytes.size())
        throw CodecError(c.header.message_size > bytes.size() ? CodecErrc::Truncated : CodecErrc::Malformed,
                         "message_size " + std::to_string(c.header.message_size) + " vs chunk length " +
                             std::to_string(bytes.size()));
    Reader r(bytes.subspan(kMessageHeaderSize));
    switch (header_kind_of(c.header.type)) {
    case HeaderKind::Raw: break;
    case HeaderKind::Asymmetric: {
        c.secure_channel_id = r.u32();
        AsymmetricSecurityHeader asym;
        decode(r, asym);
        c.asymmetric = std::move(asym);
        break;
    }
    case HeaderKind::Symmetric:
        c.secure_channel_id = r.u32();
        c.symmetric = SymmetricSecurityHeader{r.u32()};
        break;
    }
    if (header_kind_of(c.header.type) != HeaderKind::Raw) {
        SequenceHeader seq;
        decode(r, seq);
        c.sequence = seq;
    }
    c.body = r.take_remaining();
    return c;
}

namespace {

std::size_t header_length(HeaderKind kind, const ChannelFraming* channel)
{
    switch (kind) {
    case HeaderKind::Raw: return kMessageHeaderSize;
    case HeaderKind::Symmetric: return kMessageHeaderSize + 4 + 4 + kSequenceHeaderSize;
    case HeaderKind::Asymmetric:
        return kMessageHeaderSize + 4 + encode_to_bytes(channel->asymmetric).size() + kSequenceHeaderSize;
    }
    return kMessageHeaderSize;
}

}  // namespace

std::size_t body_capacity(HeaderKind kind, const ChannelFraming* channel, const ChunkLimits& limits)
{
    const std::size_t overhead = header_length(kind, channel) + limits.trailer_reserve;
    if (limits.max_chunk_size <= overhead) throw std::invalid_argument("chunk overhead exceeds max_chunk_size");
    return limits.max_chunk_size - overhead;
}

std::vector<Bytes> encode_chunks(const ServiceBody& body, HeaderKind kind, ChannelFraming* channel,
                                 std::uint32_t request_id, const ChunkLimits& limits)
{
    const MessageType type = message_type_of(body);
    if (header_kind_of(type) != kind) throw std::invalid_argument("header kind does not match body");
    if (kind != HeaderKind::Raw && !channel) throw std::invalid_argument("secured chunk without channel");
    if (limits.max_chunk_size < kMinChunkSize) throw std::invalid_argument("max_chunk_size below 8192");

    const Bytes encoded = encode_body(body);
    const std::size_t capacity = body_capacity(kind, channel, limits);
    const std::size_t count = encoded.empty() ? 1 : (encoded.size() + capacity - 1) / capacity;
    if (kind == HeaderKind::Raw && count > 1) throw CodecError(CodecErrc::BodyTooLarge, "raw message exceeds chunk");
    if (count > limits.max_chunk_count)
        throw CodecError(CodecErrc::BodyTooLarge, std::to_string(count) + " chunks exceed limit of " +
                                                      std::to_string(limits.max_chunk_count));

    std::vector<Bytes> chunks;
    chunks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t begin = i * capacity;
        const std::size_t end = std::min(encoded.size(), begin + capacity);
        Bytes chunk;
        Writer w(chunk);
        const auto tag = tag_of(type);
        w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(tag.data()), 3));
        w.u8(static_cast<std::uint8_t>(i + 1 == count ? ChunkFlag::Final : ChunkFlag::Intermediate));
        w.u32(0);
        if (kind == HeaderKind::Asymmetric) {
            w.u32(channel->secure_channel_id);
            encode(w, channel->asymmetric);
        } else if (kind == HeaderKind::Symmetric) {
            w.u32(channel->secure_channel_id);
            w.u32(channel->token_id);
        }
        if (kind != HeaderKind::Raw) {
            w.u32(channel->next_sequence_number++);
            w.u32(request_id);
        }
        w.raw(ByteView(encoded).subspan(begin, end - begin));
        write_message_size(chunk, static_cast<std::uint32_t>(chunk.size()));
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

Reassembled reassemble(std::span<const Bytes> chunks)
{
    if (chunks.empty()) throw CodecError(CodecErrc::Malformed, "no chunks");
    Reassembled out;
    Bytes body;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        Chunk c = parse_chunk(chunks[i]);
        if (c.header.flag == ChunkFlag::Abort) throw CodecError(CodecErrc::AbortReceived, "sender aborted message");
        const bool last = i + 1 == chunks.size();
        if ((c.header.flag == ChunkFlag::Final) != last)
            throw CodecError(CodecErrc::Malformed, "final flag out of place");
        if (i == 0) {
            out.type = c.header.type;
            out.secure_channel_id = c.secure_channel_id;
            out.asymmetric = c.asymmetric;
            if (c.symmetric) out.token_id = c.symmetric->token_id;
            if (c.sequence) out.sequence = *c.sequence;
        } else {
            if (c.header.type != out.type) throw CodecError(CodecErrc::Malformed, "mixed message types");
            if (c.secure_channel_id != out.secure_channel_id)
                throw CodecError(CodecErrc::Malformed, "mixed secure channel ids");
            if (c.sequence->request_id != out.sequence.request_id)
                throw CodecError(CodecErrc::MixedRequestIds, "request id changed between chunks");
            if (c.sequence->sequence_number != out.sequence.sequence_number + i)
                throw CodecError(CodecErrc::SequenceGap, "expected sequence number " +
                                                             std::to_string(out.sequence.sequence_number + i) +
                                                             ", got " + std::to_string(c.sequence->sequence_number));
        }
        append(body, c.body);
    }
    out.body = decode_body(out.type, body);
    return out;
}

}  // namespace uatrust::codec
