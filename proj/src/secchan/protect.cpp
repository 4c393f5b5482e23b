#include "uatrust/secchan/protect.hpp"

#include "uatrust/secchan/crypto.hpp"

#include <algorithm>

namespace uatrust::secchan {

namespace {

using codec::CodecError;
using codec::MessageType;

codec::MessageHeader checked_header(ByteView chunk)
{
    try {
        auto h = codec::parse_message_header(chunk);
        if (h.message_size != chunk.size())
            throw SecError(SecErrc::Malformed, "message_size does not match chunk length", status::BadDecodingError);
        return h;
    } catch (const CodecError& e) {
        throw SecError(SecErrc::Malformed, e.what(), status::BadDecodingError);
    }
}

Bytes with_size(ByteView head, std::size_t size)
{
    Bytes out(head.begin(), head.end());
    codec::write_message_size(out, static_cast<std::uint32_t>(size));
    return out;
}

std::uint32_t u32_at(ByteView b, std::size_t off)
{
    return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
           static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

constexpr std::size_t kSymmetricSequenceOffset = codec::kMessageHeaderSize + 8;

}  // namespace

void SecureChannelState::establish_keys()
{
    if (mode == MessageSecurityMode::None) {
        keys.reset();
        return;
    }
    keys = derive_keys(local_nonce, remote_nonce, *suite);
}

codec::AsymmetricSecurityHeader asymmetric_header(const SecurityPolicySuite& suite, const pki::Identity* sender,
                                                  const pki::CertificateRecord* receiver)
{
    codec::AsymmetricSecurityHeader h;
    h.security_policy_uri = std::string(suite.uri);
    if (!suite.none) {
        if (sender) h.sender_certificate = sender->certificate.der;
        if (receiver) h.receiver_certificate_thumbprint = Bytes(receiver->thumbprint.begin(), receiver->thumbprint.end());
    }
    return h;
}

Bytes protect_open_secure_channel(ByteView chunk, const pki::Identity& sender, const pki::CertificateRecord& receiver,
                                  const SecurityPolicySuite& suite, std::size_t max_chunk_size)
{
    if (suite.none) throw SecError(SecErrc::PolicyNone, "asymmetric protection is undefined for policy None");
    const auto header = checked_header(chunk);
    if (header.type != MessageType::Open) throw SecError(SecErrc::Malformed, "not an OPN chunk");
    const std::size_t seqoff = codec::sequence_header_offset(chunk);

    const std::size_t plain_block = crypto::oaep_capacity(receiver.public_key.get());
    const std::size_t cipher_block = crypto::rsa_size_bytes(receiver.public_key.get());
    const std::size_t sig = crypto::rsa_size_bytes(sender.key.get());
    const bool extra = cipher_block > 256;
    const std::size_t padfield = extra ? 2 : 1;
    const std::size_t n = chunk.size() - seqoff;
    const std::size_t pad = (plain_block - (n + padfield + sig) % plain_block) % plain_block;
    const std::size_t blocks = (n + padfield + pad + sig) / plain_block;
    const std::size_t total = seqoff + blocks * cipher_block;
    if (total > max_chunk_size)
        throw SecError(SecErrc::PlaintextTooLarge,
                       "protected OPN of " + std::to_string(total) + " bytes exceeds " + std::to_string(max_chunk_size),
                       status::BadTcpMessageTooLarge);

    Bytes signed_part = with_size(chunk, total);
    signed_part.push_back(static_cast<std::uint8_t>(pad & 0xFF));
    signed_part.insert(signed_part.end(), pad, static_cast<std::uint8_t>(pad & 0xFF));
    if (extra) signed_part.push_back(static_cast<std::uint8_t>(pad >> 8));
    const Bytes signature = crypto::rsa_sign_sha256(sender.key.get(), signed_part);

    Bytes plaintext(signed_part.begin() + static_cast<std::ptrdiff_t>(seqoff), signed_part.end());
    append(plaintext, signature);

    Bytes out(signed_part.begin(), signed_part.begin() + static_cast<std::ptrdiff_t>(seqoff));
    for (std::size_t i = 0; i < blocks; ++i)
        append(out, crypto::rsa_oaep_encrypt(receiver.public_key.get(),
                                             ByteView(plaintext).subspan(i * plain_block, plain_block)));
    return out;
}

OpenedChunk unprotect_open_secure_channel(ByteView chunk, const pki::Identity& receiver, const TrustCheck& trust)
{
    const auto header = checked_header(chunk);
    if (header.type != MessageType::Open) throw SecError(SecErrc::Malformed, "not an OPN chunk");
    codec::AsymmetricSecurityHeader asym;
    std::size_t seqoff = 0;
    try {
        codec::Reader r(chunk.subspan(codec::kMessageHeaderSize));
        r.u32();
        codec::decode(r, asym);
        seqoff = codec::kMessageHeaderSize + r.position();
    } catch (const CodecError& e) {
        throw SecError(SecErrc::Malformed, std::string("asymmetric header: ") + e.what(), status::BadDecodingError);
    }

    OpenedChunk out;
    out.suite = &suite_for_uri(asym.security_policy_uri.value_or(""));
    if (out.suite->none) {
        out.chunk.assign(chunk.begin(), chunk.end());
        return out;
    }

    if (!asym.sender_certificate) throw SecError(SecErrc::Malformed, "OPN without sender certificate");
    try {
        out.sender = pki::CertificateRecord::parse(*asym.sender_certificate);
    } catch (const pki::PkiError& e) {
        throw SecError(SecErrc::Malformed, std::string("sender certificate: ") + e.what(),
                       status::BadCertificateInvalid);
    }
    const pki::TrustVerdict verdict = trust(*out.sender);
    if (!verdict)
        throw SecError(SecErrc::TrustRejected,
                       "sender certificate " + out.sender->subject_common_name + " rejected: " +
                           status_name(verdict.reason),
                       verdict.reason);

    const auto& own = receiver.certificate.thumbprint;
    if (!asym.receiver_certificate_thumbprint ||
        !std::equal(own.begin(), own.end(), asym.receiver_certificate_thumbprint->begin(),
                    asym.receiver_certificate_thumbprint->end()))
        throw SecError(SecErrc::ThumbprintMismatch, "OPN addressed to a different certificate",
                       status::BadCertificateInvalid);

    EVP_PKEY* own_key = receiver.key.get();
    const std::size_t cipher_block = crypto::rsa_size_bytes(own_key);
    const ByteView ciphertext = chunk.subspan(seqoff);
    if (ciphertext.empty() || ciphertext.size() % cipher_block != 0)
        throw SecError(SecErrc::DecryptFailed, "ciphertext is not a whole number of RSA blocks");
    Bytes plaintext;
    for (std::size_t off = 0; off < ciphertext.size(); off += cipher_block) {
        auto block = crypto::rsa_oaep_decrypt(own_key, ciphertext.subspan(off, cipher_block));
        if (!block) throw SecError(SecErrc::DecryptFailed, "OAEP decryption failed");
        append(plaintext, *block);
    }

    const std::size_t sig = crypto::rsa_size_bytes(out.sender->public_key.get());
    const bool extra = cipher_block > 256;
    const std::size_t padfield = extra ? 2 : 1;
    if (plaintext.size() < sig + padfield + codec::kSequenceHeaderSize)
        throw SecError(SecErrc::SignatureInvalid, "plaintext shorter than signature");
    Bytes signed_part(chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(seqoff));
    signed_part.insert(signed_part.end(), plaintext.begin(), plaintext.end() - static_cast<std::ptrdiff_t>(sig));
    if (!crypto::rsa_verify_sha256(out.sender->public_key.get(), signed_part,
                                   ByteView(plaintext).subspan(plaintext.size() - sig)))
        throw SecError(SecErrc::SignatureInvalid, "OPN signature does not verify");

    const std::size_t len = signed_part.size();
    const std::uint8_t lo = signed_part[len - padfield];
    const std::size_t pad = extra ? (static_cast<std::size_t>(signed_part[len - 1]) << 8 | lo) : lo;
    if (len < seqoff + codec::kSequenceHeaderSize + padfield + pad)
        throw SecError(SecErrc::PaddingInvalid, "padding longer than message");
    const std::size_t body_end = len - padfield - pad;
    for (std::size_t i = body_end; i < len - (extra ? 1 : 0); ++i)
        if (signed_part[i] != lo) throw SecError(SecErrc::PaddingInvalid, "padding bytes inconsistent");

    out.chunk = with_size(ByteView(signed_part).first(body_end), body_end);
    return out;
}

std::size_t symmetric_trailer_reserve(const SecureChannelState& state)
{
    switch (state.mode) {
    case MessageSecurityMode::Sign: return state.suite->symmetric_signature_size;
    case MessageSecurityMode::SignAndEncrypt:
        return state.suite->symmetric_signature_size + state.suite->symmetric_block_size;
    default: return 0;
    }
}

Bytes protect_chunk(ByteView chunk, const SecureChannelState& state)
{
    const auto header = checked_header(chunk);
    if (codec::header_kind_of(header.type) != codec::HeaderKind::Symmetric)
        throw SecError(SecErrc::Malformed, "symmetric protection applies to MSG and CLO chunks only");
    if (state.mode == MessageSecurityMode::None) return Bytes(chunk.begin(), chunk.end());
    if (!state.keys) throw std::logic_error("secured channel without keys");
    const auto& keys = state.keys->local;
    const std::size_t mac = state.suite->symmetric_signature_size;

    Bytes out(chunk.begin(), chunk.end());
    if (state.mode == MessageSecurityMode::SignAndEncrypt) {
        const std::size_t block = state.suite->symmetric_block_size;
        const std::size_t n = chunk.size() - kSymmetricSequenceOffset;
        const std::size_t pad = (block - (n + 1 + mac) % block) % block;
        out.insert(out.end(), pad + 1, static_cast<std::uint8_t>(pad));
    }
    codec::write_message_size(out, static_cast<std::uint32_t>(out.size() + mac));
    append(out, crypto::hmac_sha256(keys.signing, out));
    if (state.mode == MessageSecurityMode::SignAndEncrypt) {
        const Bytes encrypted = crypto::aes256_cbc_encrypt(keys.encryption, keys.iv,
                                                           ByteView(out).subspan(kSymmetricSequenceOffset));
        std::copy(encrypted.begin(), encrypted.end(), out.begin() + kSymmetricSequenceOffset);
    }
    return out;
}

Bytes unprotect_chunk(ByteView chunk, SecureChannelState& state)
{
    const auto header = checked_header(chunk);
    if (codec::header_kind_of(header.type) != codec::HeaderKind::Symmetric)
        throw SecError(SecErrc::Malformed, "expected MSG or CLO chunk");
    if (chunk.size() < kSymmetricSequenceOffset + codec::kSequenceHeaderSize)
        throw SecError(SecErrc::Malformed, "chunk shorter than its headers", status::BadDecodingError);
    if (u32_at(chunk, 8) != state.channel_id)
        throw SecError(SecErrc::ChannelMismatch, "secure channel id mismatch", status::BadSecureChannelIdInvalid);
    if (u32_at(chunk, 12) != state.token_id)
        throw SecError(SecErrc::ChannelMismatch, "security token id mismatch", status::BadSecureChannelIdInvalid);

    Bytes plain;
    if (state.mode == MessageSecurityMode::None) {
        plain.assign(chunk.begin(), chunk.end());
    } else {
        if (!state.keys) throw std::logic_error("secured channel without keys");
        const auto& keys = state.keys->remote;
        const std::size_t mac = state.suite->symmetric_signature_size;
        Bytes full(chunk.begin(), chunk.end());
        if (state.mode == MessageSecurityMode::SignAndEncrypt) {
            const std::size_t block = state.suite->symmetric_block_size;
            const std::size_t enc = chunk.size() - kSymmetricSequenceOffset;
            if (enc % block != 0 || enc < codec::kSequenceHeaderSize + 1 + mac)
                throw SecError(SecErrc::MacInvalid, "encrypted part has an impossible length");
            const Bytes decrypted =
                crypto::aes256_cbc_decrypt(keys.encryption, keys.iv, chunk.subspan(kSymmetricSequenceOffset));
            std::copy(decrypted.begin(), decrypted.end(), full.begin() + kSymmetricSequenceOffset);
        }
        if (full.size() < kSymmetricSequenceOffset + codec::kSequenceHeaderSize + mac)
            throw SecError(SecErrc::MacInvalid, "chunk too short for its signature");
        const std::size_t signed_len = full.size() - mac;
        if (!crypto::hmac_sha256_verify(keys.signing, ByteView(full).first(signed_len),
                                        ByteView(full).subspan(signed_len)))
            throw SecError(SecErrc::MacInvalid, "chunk signature does not verify");
        std::size_t body_end = signed_len;
        if (state.mode == MessageSecurityMode::SignAndEncrypt) {
            const std::uint8_t pad = full[signed_len - 1];
            if (signed_len < kSymmetricSequenceOffset + codec::kSequenceHeaderSize + pad + 1u)
                throw SecError(SecErrc::PaddingInvalid, "padding longer than message");
            body_end = signed_len - pad - 1;
            for (std::size_t i = body_end; i < signed_len; ++i)
                if (full[i] != pad) throw SecError(SecErrc::PaddingInvalid, "padding bytes inconsistent");
        }
        plain = with_size(ByteView(full).first(body_end), body_end);
    }

    const std::uint32_t seq = u32_at(plain, kSymmetricSequenceOffset);
    if (state.recv_sequence && seq != *state.recv_sequence + 1)
        throw SecError(SecErrc::SequenceGap,
                       "expected sequence number " + std::to_string(*state.recv_sequence + 1) + ", got " +
                           std::to_string(seq),
                       status::BadSequenceNumberInvalid);
    state.recv_sequence = seq;
    return plain;
}

}  // namespace uatrust::secchan
