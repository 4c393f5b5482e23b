#include "uatrust/common/status.hpp"

#include <array>
#include <cstdio>
#include <utility>

namespace uatrust {

std::string status_name(StatusCode code)
{
    using namespace status;
    static const std::array<std::pair<StatusCode, const char*>, 37> names{{
        {Good, "Good"},
        {BadUnexpectedError, "BadUnexpectedError"},
        {BadInternalError, "BadInternalError"},
        {BadCommunicationError, "BadCommunicationError"},
        {BadEncodingError, "BadEncodingError"},
        {BadDecodingError, "BadDecodingError"},
        {BadTimeout, "BadTimeout"},
        {BadServiceUnsupported, "BadServiceUnsupported"},
        {BadNothingToDo, "BadNothingToDo"},
        {BadCertificateInvalid, "BadCertificateInvalid"},
        {BadSecurityChecksFailed, "BadSecurityChecksFailed"},
        {BadCertificateTimeInvalid, "BadCertificateTimeInvalid"},
        {BadCertificateUriInvalid, "BadCertificateUriInvalid"},
        {BadCertificateUntrusted, "BadCertificateUntrusted"},
        {BadUserAccessDenied, "BadUserAccessDenied"},
        {BadIdentityTokenInvalid, "BadIdentityTokenInvalid"},
        {BadIdentityTokenRejected, "BadIdentityTokenRejected"},
        {BadSecureChannelIdInvalid, "BadSecureChannelIdInvalid"},
        {BadNonceInvalid, "BadNonceInvalid"},
        {BadSessionIdInvalid, "BadSessionIdInvalid"},
        {BadSessionClosed, "BadSessionClosed"},
        {BadSessionNotActivated, "BadSessionNotActivated"},
        {BadRequestHeaderInvalid, "BadRequestHeaderInvalid"},
        {BadNodeIdUnknown, "BadNodeIdUnknown"},
        {BadAttributeIdInvalid, "BadAttributeIdInvalid"},
        {BadNotWritable, "BadNotWritable"},
        {BadSecurityModeRejected, "BadSecurityModeRejected"},
        {BadSecurityPolicyRejected, "BadSecurityPolicyRejected"},
        {BadUserSignatureInvalid, "BadUserSignatureInvalid"},
        {BadApplicationSignatureInvalid, "BadApplicationSignatureInvalid"},
        {BadTypeMismatch, "BadTypeMismatch"},
        {BadTcpMessageTypeInvalid, "BadTcpMessageTypeInvalid"},
        {BadTcpSecureChannelUnknown, "BadTcpSecureChannelUnknown"},
        {BadTcpMessageTooLarge, "BadTcpMessageTooLarge"},
        {BadTcpEndpointUrlInvalid, "BadTcpEndpointUrlInvalid"},
        {BadSequenceNumberInvalid, "BadSequenceNumberInvalid"},
        {BadProtocolVersionUnsupported, "BadProtocolVersionUnsupported"},
    }};
    for (const auto& [c, n] : names)
        if (c == code) return n;
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", code.value);
    return buf;
}

}  // namespace uatrust
