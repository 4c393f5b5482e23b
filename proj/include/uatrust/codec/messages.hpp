#pragma once

// Connection-protocol messages and the service request/response bodies this toolkit speaks.
// Everything else decodes into UnknownService so it can be forwarded untouched.

#include "uatrust/codec/builtin.hpp"

#include <string_view>

namespace uatrust::codec {

enum class MessageSecurityMode : std::int32_t { Invalid = 0, None = 1, Sign = 2, SignAndEncrypt = 3 };
enum class ApplicationType : std::int32_t { Server = 0, Client = 1, ClientAndServer = 2, DiscoveryServer = 3 };
enum class UserTokenType : std::int32_t { Anonymous = 0, UserName = 1, Certificate = 2, IssuedToken = 3 };
enum class SecurityTokenRequestType : std::int32_t { Issue = 0, Renew = 1 };
enum class TimestampsToReturn : std::int32_t { Source = 0, Server = 1, Both = 2, Neither = 3 };

const char* to_string(MessageSecurityMode mode);
const char* to_string(UserTokenType type);

inline constexpr std::uint32_t kAttributeValue = 13;

// Binary encoding ids (namespace 0) of the structures carried in ExtensionObjects.
namespace encoding_id {
inline constexpr std::uint32_t AnonymousIdentityToken = 321;
inline constexpr std::uint32_t UserNameIdentityToken = 324;
inline constexpr std::uint32_t X509IdentityToken = 327;
}  // namespace encoding_id

struct RequestHeader {
    NodeId authentication_token;
    DateTime timestamp;
    std::uint32_t request_handle = 0;
    std::uint32_t return_diagnostics = 0;
    UaString audit_entry_id;
    std::uint32_t timeout_hint = 0;
    ExtensionObject additional_header;

    UATRUST_FIELDS(authentication_token, timestamp, request_handle, return_diagnostics, audit_entry_id,
                   timeout_hint, additional_header)
    friend bool operator==(const RequestHeader&, const RequestHeader&) = default;
};

struct ResponseHeader {
    DateTime timestamp;
    std::uint32_t request_handle = 0;
    StatusCode service_result;
    DiagnosticInfo service_diagnostics;
    std::vector<UaString> string_table;
    ExtensionObject additional_header;

    UATRUST_FIELDS(timestamp, request_handle, service_result, service_diagnostics, string_table, additional_header)
    friend bool operator==(const ResponseHeader&, const ResponseHeader&) = default;
};

struct ApplicationDescription {
    UaString application_uri;
    UaString product_uri;
    LocalizedText application_name;
    ApplicationType application_type = ApplicationType::Server;
    UaString gateway_server_uri;
    UaString discovery_profile_uri;
    std::vector<UaString> discovery_urls;

    UATRUST_FIELDS(application_uri, product_uri, application_name, application_type, gateway_server_uri,
                   discovery_profile_uri, discovery_urls)
    friend bool operator==(const ApplicationDescription&, const ApplicationDescription&) = default;
};

struct UserTokenPolicy {
    UaString policy_id;
    UserTokenType token_type = UserTokenType::Anonymous;
    UaString issued_token_type;
    UaString issuer_endpoint_url;
    UaString security_policy_uri;

    UATRUST_FIELDS(policy_id, token_type, issued_token_type, issuer_endpoint_url, security_policy_uri)
    friend bool operator==(const UserTokenPolicy&, const UserTokenPolicy&) = default;
};

struct EndpointDescription {
    UaString endpoint_url;
    ApplicationDescription server;
    UaByteString server_certificate;
    MessageSecurityMode security_mode = MessageSecurityMode::None;
    UaString security_policy_uri;
    std::vector<UserTokenPolicy> user_identity_tokens;
    UaString transport_profile_uri;
    std::uint8_t security_level = 0;

    UATRUST_FIELDS(endpoint_url, server, server_certificate, security_mode, security_policy_uri,
                   user_identity_tokens, transport_profile_uri, security_level)
    friend bool operator==(const EndpointDescription&, const EndpointDescription&) = default;
};

struct ChannelSecurityToken {
    std::uint32_t channel_id = 0;
    std::uint32_t token_id = 0;
    DateTime created_at;
    std::uint32_t revised_lifetime = 0;

    UATRUST_FIELDS(channel_id, token_id, created_at, revised_lifetime)
    friend bool operator==(const ChannelSecurityToken&, const ChannelSecurityToken&) = default;
};

struct SignatureData {
    UaString algorithm;
    UaByteString signature;

    UATRUST_FIELDS(algorithm, signature)
    friend bool operator==(const SignatureData&, const SignatureData&) = default;
};

struct SignedSoftwareCertificate {
    UaByteString certificate_data;
    UaByteString signature;

    UATRUST_FIELDS(certificate_data, signature)
    friend bool operator==(const SignedSoftwareCertificate&, const SignedSoftwareCertificate&) = default;
};

struct AnonymousIdentityToken {
    UaString policy_id;

    UATRUST_FIELDS(policy_id)
    friend bool operator==(const AnonymousIdentityToken&, const AnonymousIdentityToken&) = default;
};

struct UserNameIdentityToken {
    UaString policy_id;
    UaString user_name;
    UaByteString password;
    UaString encryption_algorithm;

    UATRUST_FIELDS(policy_id, user_name, password, encryption_algorithm)
    friend bool operator==(const UserNameIdentityToken&, const UserNameIdentityToken&) = default;
};

struct X509IdentityToken {
    UaString policy_id;
    UaByteString certificate_data;

    UATRUST_FIELDS(policy_id, certificate_data)
    friend bool operator==(const X509IdentityToken&, const X509IdentityToken&) = default;
};

struct ReadValueId {
    NodeId node_id;
    std::uint32_t attribute_id = kAttributeValue;
    UaString index_range;
    QualifiedName data_encoding;

    UATRUST_FIELDS(node_id, attribute_id, index_range, data_encoding)
    friend bool operator==(const ReadValueId&, const ReadValueId&) = default;
};

struct WriteValue {
    NodeId node_id;
    std::uint32_t attribute_id = kAttributeValue;
    UaString index_range;
    DataValue value;

    UATRUST_FIELDS(node_id, attribute_id, index_range, value)
    friend bool operator==(const WriteValue&, const WriteValue&) = default;
};

// ---- connection protocol (HEL / ACK / ERR) ----

struct HelloMessage {
    std::uint32_t protocol_version = 0;
    std::uint32_t receive_buffer_size = 65536;
    std::uint32_t send_buffer_size = 65536;
    std::uint32_t max_message_size = 0;
    std::uint32_t max_chunk_count = 0;
    UaString endpoint_url;

    UATRUST_FIELDS(protocol_version, receive_buffer_size, send_buffer_size, max_message_size, max_chunk_count,
                   endpoint_url)
    friend bool operator==(const HelloMessage&, const HelloMessage&) = default;
};

struct AcknowledgeMessage {
    std::uint32_t protocol_version = 0;
    std::uint32_t receive_buffer_size = 65536;
    std::uint32_t send_buffer_size = 65536;
    std::uint32_t max_message_size = 0;
    std::uint32_t max_chunk_count = 0;

    UATRUST_FIELDS(protocol_version, receive_buffer_size, send_buffer_size, max_message_size, max_chunk_count)
    friend bool operator==(const AcknowledgeMessage&, const AcknowledgeMessage&) = default;
};

struct ErrorMessage {
    StatusCode error;
    UaString reason;

    UATRUST_FIELDS(error, reason)
    friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

// ---- services ----

struct FindServersRequest {
    static constexpr std::uint32_t kEncodingId = 422;
    RequestHeader request_header;
    UaString endpoint_url;
    std::vector<UaString> locale_ids;
    std::vector<UaString> server_uris;

    UATRUST_FIELDS(request_header, endpoint_url, locale_ids, server_uris)
    friend bool operator==(const FindServersRequest&, const FindServersRequest&) = default;
};

struct FindServersResponse {
    static constexpr std::uint32_t kEncodingId = 425;
    ResponseHeader response_header;
    std::vector<ApplicationDescription> servers;

    UATRUST_FIELDS(response_header, servers)
    friend bool operator==(const FindServersResponse&, const FindServersResponse&) = default;
};

struct GetEndpointsRequest {
    static constexpr std::uint32_t kEncodingId = 428;
    RequestHeader request_header;
    UaString endpoint_url;
    std::vector<UaString> locale_ids;
    std::vector<UaString> profile_uris;

    UATRUST_FIELDS(request_header, endpoint_url, locale_ids, profile_uris)
    friend bool operator==(const GetEndpointsRequest&, const GetEndpointsRequest&) = default;
};

struct GetEndpointsResponse {
    static constexpr std::uint32_t kEncodingId = 431;
    ResponseHeader response_header;
    std::vector<EndpointDescription> endpoints;

    UATRUST_FIELDS(response_header, endpoints)
    friend bool operator==(const GetEndpointsResponse&, const GetEndpointsResponse&) = default;
};

struct OpenSecureChannelRequest {
    static constexpr std::uint32_t kEncodingId = 446;
    RequestHeader request_header;
    std::uint32_t client_protocol_version = 0;
    SecurityTokenRequestType request_type = SecurityTokenRequestType::Issue;
    MessageSecurityMode security_mode = MessageSecurityMode::None;
    UaByteString client_nonce;
    std::uint32_t requested_lifetime = 3600000;

    UATRUST_FIELDS(request_header, client_protocol_version, request_type, security_mode, client_nonce,
                   requested_lifetime)
    friend bool operator==(const OpenSecureChannelRequest&, const OpenSecureChannelRequest&) = default;
};

struct OpenSecureChannelResponse {
    static constexpr std::uint32_t kEncodingId = 449;
    ResponseHeader response_header;
    std::uint32_t server_protocol_version = 0;
    ChannelSecurityToken security_token;
    UaByteString server_nonce;

    UATRUST_FIELDS(response_header, server_protocol_version, security_token, server_nonce)
    friend bool operator==(const OpenSecureChannelResponse&, const OpenSecureChannelResponse&) = default;
};

struct CloseSecureChannelRequest {
    static constexpr std::uint32_t kEncodingId = 452;
    RequestHeader request_header;

    UATRUST_FIELDS(request_header)
    friend bool operator==(const CloseSecureChannelRequest&, const CloseSecureChannelRequest&) = default;
};

struct CreateSessionRequest {
    static constexpr std::uint32_t kEncodingId = 461;
    RequestHeader request_header;
    ApplicationDescription client_description;
    UaString server_uri;
    UaString endpoint_url;
    UaString session_name;
    UaByteString client_nonce;
    UaByteString client_certificate;
    double requested_session_timeout = 60000.0;
    std::uint32_t max_response_message_size = 0;

    UATRUST_FIELDS(request_header, client_description, server_uri, endpoint_url, session_name, client_nonce,
                   client_certificate, requested_session_timeout, max_response_message_size)
    friend bool operator==(const CreateSessionRequest&, const CreateSessionRequest&) = default;
};

struct CreateSessionResponse {
    static constexpr std::uint32_t kEncodingId = 464;
    ResponseHeader response_header;
    NodeId session_id;
    NodeId authentication_token;
    double revised_session_timeout = 0;
    UaByteString server_nonce;
    UaByteString server_certificate;
    std::vector<EndpointDescription> server_endpoints;
    std::vector<SignedSoftwareCertificate> server_software_certificates;
    SignatureData server_signature;
    std::uint32_t max_request_message_size = 0;

    UATRUST_FIELDS(response_header, session_id, authentication_token, revised_session_timeout, server_nonce,
                   server_certificate, server_endpoints, server_software_certificates, server_signature,
                   max_request_message_size)
    friend bool operator==(const CreateSessionResponse&, const CreateSessionResponse&) = default;
};

struct ActivateSessionRequest {
    static constexpr std::uint32_t kEncodingId = 467;
    RequestHeader request_header;
    SignatureData client_signature;
    std::vector<SignedSoftwareCertificate> client_software_certificates;
    std::vector<UaString> locale_ids;
    ExtensionObject user_identity_token;
    SignatureData user_token_signature;

    UATRUST_FIELDS(request_header, client_signature, client_software_certificates, locale_ids, user_identity_token,
                   user_token_signature)
    friend bool operator==(const ActivateSessionRequest&, const ActivateSessionRequest&) = default;
};

struct ActivateSessionResponse {
    static constexpr std::uint32_t kEncodingId = 470;
    ResponseHeader response_header;
    UaByteString server_nonce;
    std::vector<StatusCode> results;
    std::vector<DiagnosticInfo> diagnostic_infos;

    UATRUST_FIELDS(response_header, server_nonce, results, diagnostic_infos)
    friend bool operator==(const ActivateSessionResponse&, const ActivateSessionResponse&) = default;
};

struct CloseSessionRequest {
    static constexpr std::uint32_t kEncodingId = 473;
    RequestHeader request_header;
    bool delete_subscriptions = true;

    UATRUST_FIELDS(request_header, delete_subscriptions)
    friend bool operator==(const CloseSessionRequest&, const CloseSessionRequest&) = default;
};

struct CloseSessionResponse {
    static constexpr std::uint32_t kEncodingId = 476;
    ResponseHeader response_header;

    UATRUST_FIELDS(response_header)
    friend bool operator==(const CloseSessionResponse&, const CloseSessionResponse&) = default;
};

struct ReadRequest {
    static constexpr std::uint32_t kEncodingId = 631;
    RequestHeader request_header;
    double max_age = 0;
    TimestampsToReturn timestamps_to_return = TimestampsToReturn::Neither;
    std::vector<ReadValueId> nodes_to_read;

    UATRUST_FIELDS(request_header, max_age, timestamps_to_return, nodes_to_read)
    friend bool operator==(const ReadRequest&, const ReadRequest&) = default;
};

struct ReadResponse {
    static constexpr std::uint32_t kEncodingId = 634;
    ResponseHeader response_header;
    std::vector<DataValue> results;
    std::vector<DiagnosticInfo> diagnostic_infos;

    UATRUST_FIELDS(response_header, results, diagnostic_infos)
    friend bool operator==(const ReadResponse&, const ReadResponse&) = default;
};

struct WriteRequest {
    static constexpr std::uint32_t kEncodingId = 673;
    RequestHeader request_header;
    std::vector<WriteValue> nodes_to_write;

    UATRUST_FIELDS(request_header, nodes_to_write)
    friend bool operator==(const WriteRequest&, const WriteRequest&) = default;
};

struct WriteResponse {
    static constexpr std::uint32_t kEncodingId = 676;
    ResponseHeader response_header;
    std::vector<StatusCode> results;
    std::vector<DiagnosticInfo> diagnostic_infos;

    UATRUST_FIELDS(response_header, results, diagnostic_infos)
    friend bool operator==(const WriteResponse&, const WriteResponse&) = default;
};

struct ServiceFault {
    static constexpr std::uint32_t kEncodingId = 397;
    ResponseHeader response_header;

    UATRUST_FIELDS(response_header)
    friend bool operator==(const ServiceFault&, const ServiceFault&) = default;
};

// Any service outside the modeled subset: the type NodeId and the undecoded structure bytes.
struct UnknownService {
    NodeId type_id;
    Bytes payload;

    friend bool operator==(const UnknownService&, const UnknownService&) = default;
};

using ServiceBody =
    std::variant<HelloMessage, AcknowledgeMessage, ErrorMessage, FindServersRequest, FindServersResponse,
                 GetEndpointsRequest, GetEndpointsResponse, OpenSecureChannelRequest, OpenSecureChannelResponse,
                 CloseSecureChannelRequest, CreateSessionRequest, CreateSessionResponse, ActivateSessionRequest,
                 ActivateSessionResponse, CloseSessionRequest, CloseSessionResponse, ReadRequest, ReadResponse,
                 WriteRequest, WriteResponse, ServiceFault, UnknownService>;

enum class MessageType : std::uint8_t { Hello, Acknowledge, Error, Open, Message, Close };

std::string_view tag_of(MessageType type);  // "HEL", "ACK", ...
std::optional<MessageType> message_type_from_tag(ByteView three_bytes);

MessageType message_type_of(const ServiceBody& body);
std::string_view body_name(const ServiceBody& body);

// Encoded body as carried in a chunk: the structure alone for HEL/ACK/ERR, otherwise the
// type-encoding NodeId followed by the structure.
Bytes encode_body(const ServiceBody& body);
// Errors: Truncated, Malformed (including trailing bytes or a body that does not belong to the
// message type), UnsupportedKind.
ServiceBody decode_body(MessageType type, ByteView bytes);

// Request header of a request body, or nullptr for responses and HEL/ACK/ERR.
RequestHeader* request_header_of(ServiceBody& body);
const ResponseHeader* response_header_of(const ServiceBody& body);

// Splits the leading RequestHeader off an opaque request payload.
// Errors: Truncated, Malformed.
std::pair<RequestHeader, Bytes> split_request_header(const UnknownService& service);
std::pair<ResponseHeader, Bytes> split_response_header(const UnknownService& service);
UnknownService join_request_header(NodeId type_id, const RequestHeader& header, ByteView rest);
UnknownService join_response_header(NodeId type_id, const ResponseHeader& header, ByteView rest);

// Wraps a structure into an ExtensionObject carrying its binary encoding id.
template <class T>
ExtensionObject make_extension_object(std::uint32_t encoding_id, const T& value)
{
    return {NodeId::numeric(0, encoding_id), encode_to_bytes(value)};
}

}  // namespace uatrust::codec
