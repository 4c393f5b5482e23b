#include "uatrust/codec/messages.hpp"

#include <cstring>

namespace uatrust::codec {

const char* to_string(MessageSecurityMode mode)
{
    switch (mode) {
    case MessageSecurityMode::Invalid: return "Invalid";
    case MessageSecurityMode::None: return "None";
    case MessageSecurityMode::Sign: return "Sign";
    case MessageSecurityMode::SignAndEncrypt: return "SignAndEncrypt";
    }
    return "Unknown";
}

const char* to_string(UserTokenType type)
{
    switch (type) {
    case UserTokenType::Anonymous: return "Anonymous";
    case UserTokenType::UserName: return "UserName";
    case UserTokenType::Certificate: return "Certificate";
    case UserTokenType::IssuedToken: return "IssuedToken";
    }
    return "Unknown";
}

std::string_view tag_of(MessageType type)
{
    switch (type) {
    case MessageType::Hello: return "HEL";
    case MessageType::Acknowledge: return "ACK";
    case MessageType::Error: return "ERR";
    case MessageType::Open: return "OPN";
    case MessageType::Message: return "MSG";
    case MessageType::Close: return "CLO";
    }
    return "???";
}

std::optional<MessageType> message_type_from_tag(ByteView three_bytes)
{
    if (three_bytes.size() < 3) return std::nullopt;
    for (auto t : {MessageType::Hello, MessageType::Acknowledge, MessageType::Error, MessageType::Open,
                   MessageType::Message, MessageType::Close}) {
        if (std::memcmp(tag_of(t).data(), three_bytes.data(), 3) == 0) return t;
    }
    return std::nullopt;
}

namespace {

template <class T>
concept HasEncodingId = requires { T::kEncodingId; };

template <class T>
ServiceBody decode_service(Reader& r)
{
    T v{};
    decode(r, v);
    return v;
}

using ServiceDecoder = ServiceBody (*)(Reader&);

struct Dispatch {
    std::uint32_t id;
    ServiceDecoder decoder;
};

template <std::size_t... I>
constexpr auto make_dispatch(std::index_sequence<I...>)
{
    std::array<Dispatch, sizeof...(I)> out{};
    std::size_t n = 0;
    (
        [&] {
            using T = std::variant_alternative_t<I, ServiceBody>;
            if constexpr (HasEncodingId<T>) out[n++] = {T::kEncodingId, &decode_service<T>};
        }(),
        ...);
    return out;
}

const auto dispatch_table = make_dispatch(std::make_index_sequence<std::variant_size_v<ServiceBody>>{});

}  // namespace

MessageType message_type_of(const ServiceBody& body)
{
    return std::visit(
        [](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, HelloMessage>) return MessageType::Hello;
            else if constexpr (std::is_same_v<T, AcknowledgeMessage>) return MessageType::Acknowledge;
            else if constexpr (std::is_same_v<T, ErrorMessage>) return MessageType::Error;
            else if constexpr (std::is_same_v<T, OpenSecureChannelRequest> ||
                               std::is_same_v<T, OpenSecureChannelResponse>)
                return MessageType::Open;
            else if constexpr (std::is_same_v<T, CloseSecureChannelRequest>) return MessageType::Close;
            else return MessageType::Message;
        },
        body);
}

std::string_view body_name(const ServiceBody& body)
{
    static constexpr std::string_view names[] = {
        "Hello",
        "Acknowledge",
        "Error",
        "FindServersRequest",
        "FindServersResponse",
        "GetEndpointsRequest",
        "GetEndpointsResponse",
        "OpenSecureChannelRequest",
        "OpenSecureChannelResponse",
        "CloseSecureChannelRequest",
        "CreateSessionRequest",
        "CreateSessionResponse",
        "ActivateSessionRequest",
        "ActivateSessionResponse",
        "CloseSessionRequest",
        "CloseSessionResponse",
        "ReadRequest",
        "ReadResponse",
        "WriteRequest",
        "WriteResponse",
        "ServiceFault",
        "UnknownService",
    };
    static_assert(std::size(names) == std::variant_size_v<ServiceBody>);
    return names[body.index()];
}

Bytes encode_body(const ServiceBody& body)
{
    Bytes out;
    Writer w(out);
    std::visit(
        [&w](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, UnknownService>) {
                encode(w, b.type_id);
                w.raw(b.payload);
            } else if constexpr (HasEncodingId<T>) {
                encode(w, NodeId::numeric(0, T::kEncodingId));
                encode(w, b);
            } else {
                encode(w, b);
            }
        },
        body);
    return out;
}

ServiceBody decode_body(MessageType type, ByteView bytes)
{
    Reader r(bytes);
    ServiceBody out;
    switch (type) {
    case MessageType::Hello: out = decode_service<HelloMessage>(r); break;
    case MessageType::Acknowledge: out = decode_service<AcknowledgeMessage>(r); break;
    case MessageType::Error: out = decode_service<ErrorMessage>(r); break;
    default: {
        NodeId type_id;
        decode(r, type_id);
        const auto* numeric = std::get_if<std::uint32_t>(&type_id.identifier);
        const Dispatch* hit = nullptr;
        if (type_id.namespace_index == 0 && numeric) {
            for (const auto& d : dispatch_table)
                if (d.decoder && d.id == *numeric) hit = &d;
        }
        if (hit) {
            out = hit->decoder(r);
        } else {
            out = UnknownService{std::move(type_id), r.take_remaining()};
        }
        if (message_type_of(out) != type)
            throw CodecError(CodecErrc::Malformed,
                             std::string(body_name(out)) + " not allowed in " + std::string(tag_of(type)));
        break;
    }
    }
    if (!r.at_end()) throw CodecError(CodecErrc::Malformed, "trailing bytes after body");
    return out;
}

RequestHeader* request_header_of(ServiceBody& body)
{
    return std::visit(
        [](auto& b) -> RequestHeader* {
            if constexpr (requires { b.request_header; }) return &b.request_header;
            else return nullptr;
        },
        body);
}

const ResponseHeader* response_header_of(const ServiceBody& body)
{
    return std::visit(
        [](const auto& b) -> const ResponseHeader* {
            if constexpr (requires { b.response_header; }) return &b.response_header;
            else return nullptr;
        },
        body);
}

std::pair<RequestHeader, Bytes> split_request_header(const UnknownService& service)
{
    Reader r(service.payload);
    RequestHeader header;
    decode(r, header);
    return {std::move(header), r.take_remaining()};
}

std::pair<ResponseHeader, Bytes> split_response_header(const UnknownService& service)
{
    Reader r(service.payload);
    ResponseHeader header;
    decode(r, header);
    return {std::move(header), r.take_remaining()};
}

template <class H>
static UnknownService join(NodeId type_id, const H& header, ByteView rest)
{
    Bytes payload = encode_to_bytes(header);
    payload.insert(payload.end(), rest.begin(), rest.end());
    return {std::move(type_id), std::move(payload)};
}

UnknownService join_request_header(NodeId type_id, const RequestHeader& header, ByteView rest)
{
    return join(std::move(type_id), header, rest);
}

UnknownService join_response_header(NodeId type_id, const ResponseHeader& header, ByteView rest)
{
    return join(std::move(type_id), header, rest);
}

}  // namespace uatrust::codec
