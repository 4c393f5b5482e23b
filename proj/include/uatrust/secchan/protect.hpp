#pragma once

// Message security for UA-TCP chunks: asymmetric protection of OPN chunks and symmetric
// protection of MSG/CLO chunks. Inputs and outputs are whole chunks; the unprotected form is
// exactly what codec::encode_chunks produces and codec::parse_chunk accepts.

#include "uatrust/codec/chunking.hpp"
#include "uatrust/pki/trust.hpp"
#include "uatrust/secchan/suite.hpp"

#include <functional>

namespace uatrust::secchan {

using codec::MessageSecurityMode;

struct SecureChannelState {
    std::uint32_t channel_id = 0;
    std::uint32_t token_id = 0;
    const SecurityPolicySuite* suite = &suite_none();
    MessageSecurityMode mode = MessageSecurityMode::None;
    Bytes local_nonce;
    Bytes remote_nonce;
    std::optional<ChannelKeys> keys;
    std::uint32_t send_sequence = 1;             // next sequence number to send
    std::optional<std::uint32_t> recv_sequence;  // last sequence number accepted
    pki::Identity local;
    std::optional<pki::CertificateRecord> remote;

    // Derives keys from the two nonces when the mode needs them.
    void establish_keys();
};

// Header for an OPN chunk under suite. Sender and receiver are ignored for policy None.
codec::AsymmetricSecurityHeader asymmetric_header(const SecurityPolicySuite& suite, const pki::Identity* sender,
                                                  const pki::CertificateRecord* receiver);

// chunk: an unprotected OPN chunk whose asymmetric header names suite. The result is signed
// with sender.key and encrypted to receiver.
// Errors: PolicyNone, PlaintextTooLarge (result would exceed max_chunk_size).
Bytes protect_open_secure_channel(ByteView chunk, const pki::Identity& sender, const pki::CertificateRecord& receiver,
                                  const SecurityPolicySuite& suite,
                                  std::size_t max_chunk_size = codec::kDefaultChunkSize);

using TrustCheck = std::function<pki::TrustVerdict(const pki::CertificateRecord&)>;

struct OpenedChunk {
    Bytes chunk;  // unprotected, parseable by codec::parse_chunk
    const SecurityPolicySuite* suite = &suite_none();
    std::optional<pki::CertificateRecord> sender;
};

// The sender certificate is parsed and judged by trust before anything is decrypted; rejection
// aborts with TrustRejected carrying the verdict's reason. A policy-None chunk is returned as is.
// Errors: TrustRejected, ThumbprintMismatch, DecryptFailed, SignatureInvalid, PaddingInvalid,
// PolicyUnsupported, Malformed.
OpenedChunk unprotect_open_secure_channel(ByteView chunk, const pki::Identity& receiver, const TrustCheck& trust);

// Bytes the symmetric layer appends at most to a chunk of the given mode (padding + signature).
std::size_t symmetric_trailer_reserve(const SecureChannelState& state);

// Identity for mode None. Does not advance state.
Bytes protect_chunk(ByteView chunk, const SecureChannelState& state);

// Checks channel id, token id, MAC, padding and sequence continuity; state.recv_sequence only
// advances on success. Errors: MacInvalid, PaddingInvalid, SequenceGap, ChannelMismatch, Malformed.
Bytes unprotect_chunk(ByteView chunk, SecureChannelState& state);

}  // namespace uatrust::secchan
