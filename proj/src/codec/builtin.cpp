#include "uatrust/codec/builtin.hpp"

#include <charconv>
#include <chrono>
#include <sstream>

namespace uatrust::codec {

const char* to_string(CodecErrc code)
{
    switch (code) {
    case CodecErrc::Truncated: return "Truncated";
    case CodecErrc::Malformed: return "Malformed";
    case CodecErrc::UnsupportedKind: return "UnsupportedKind";
    case CodecErrc::BodyTooLarge: return "BodyTooLarge";
    case CodecErrc::SequenceGap: return "SequenceGap";
    case CodecErrc::MixedRequestIds: return "MixedRequestIds";
    case CodecErrc::AbortReceived: return "AbortReceived";
    }
    return "Unknown";
}

CodecError::CodecError(CodecErrc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

DateTime DateTime::now()
{
    // 1601-01-01 to 1970-01-01 in 100 ns ticks
    constexpr std::int64_t epoch_offset = 116444736000000000LL;
    const auto since_epoch = std::chrono::system_clock::now().time_since_epoch();
    return {epoch_offset + std::chrono::duration_cast<std::chrono::nanoseconds>(since_epoch).count() / 100};
}

ByteView Reader::take(std::size_t n)
{
    if (n > remaining()) throw CodecError(CodecErrc::Truncated, "need " + std::to_string(n) + " bytes");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

Bytes Reader::take_remaining()
{
    auto rest = take(remaining());
    return Bytes(rest.begin(), rest.end());
}

// ---- NodeId helpers ----

bool NodeId::is_null() const
{
    if (namespace_index != 0) return false;
    return std::visit(
        [](const auto& id) {
            using T = std::decay_t<decltype(id)>;
            if constexpr (std::is_same_v<T, std::uint32_t>) return id == 0;
            else if constexpr (std::is_same_v<T, Guid>) return id == Guid{};
            else return id.empty();
        },
        identifier);
}

std::string NodeId::to_string() const
{
    std::ostringstream os;
    if (namespace_index != 0) os << "ns=" << namespace_index << ';';
    std::visit(
        [&os](const auto& id) {
            using T = std::decay_t<decltype(id)>;
            if constexpr (std::is_same_v<T, std::uint32_t>) os << "i=" << id;
            else if constexpr (std::is_same_v<T, std::string>) os << "s=" << id;
            else if constexpr (std::is_same_v<T, Guid>) {
                Bytes raw = encode_to_bytes(id);
                os << "g=" << to_hex(raw);
            } else os << "b=" << to_hex(id);
        },
        identifier);
    return os.str();
}

NodeId NodeId::parse(std::string_view text)
{
    NodeId out;
    if (text.starts_with("ns=")) {
        const auto semi = text.find(';');
        if (semi == std::string_view::npos) throw std::invalid_argument("NodeId: missing ';'");
        unsigned ns = 0;
        auto ns_text = text.substr(3, semi - 3);
        auto [p, ec] = std::from_chars(ns_text.data(), ns_text.data() + ns_text.size(), ns);
        if (ec != std::errc{} || p != ns_text.data() + ns_text.size() || ns > 0xFFFF)
            throw std::invalid_argument("NodeId: bad namespace");
        out.namespace_index = static_cast<std::uint16_t>(ns);
        text.remove_prefix(semi + 1);
    }
    if (text.size() < 2 || text[1] != '=') throw std::invalid_argument("NodeId: missing identifier type");
    const auto body = text.substr(2);
    switch (text[0]) {
    case 'i': {
        std::uint32_t id = 0;
        auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), id);
        if (ec != std::errc{} || p != body.data() + body.size()) throw std::invalid_argument("NodeId: bad numeric");
        out.identifier = id;
        break;
    }
    case 's': out.identifier = std::string(body); break;
    case 'b': out.identifier = from_hex(body); break;
    case 'g': {
        auto raw = from_hex(body);
        if (raw.size() != 16) throw std::invalid_argument("NodeId: bad guid");
        Reader r(raw);
        Guid g;
        decode(r, g);
        out.identifier = g;
        break;
    }
    default: throw std::invalid_argument("NodeId: unknown identifier type");
    }
    return out;
}

// ---- scalar encoders ----

void encode(Writer& w, bool v) { w.u8(v ? 1 : 0); }
void encode(Writer& w, std::int8_t v) { w.i8(v); }
void encode(Writer& w, std::uint8_t v) { w.u8(v); }
void encode(Writer& w, std::int16_t v) { w.i16(v); }
void encode(Writer& w, std::uint16_t v) { w.u16(v); }
void encode(Writer& w, std::int32_t v) { w.i32(v); }
void encode(Writer& w, std::uint32_t v) { w.u32(v); }
void encode(Writer& w, std::int64_t v) { w.i64(v); }
void encode(Writer& w, std::uint64_t v) { w.u64(v); }
void encode(Writer& w, float v) { w.f32(v); }
void encode(Writer& w, double v) { w.f64(v); }

void encode(Writer& w, const UaString& v)
{
    if (!v) {
        w.i32(-1);
        return;
    }
    w.i32(static_cast<std::int32_t>(v->size()));
    w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(v->data()), v->size()));
}

void encode(Writer& w, const UaByteString& v)
{
    if (!v) {
        w.i32(-1);
        return;
    }
    w.i32(static_cast<std::int32_t>(v->size()));
    w.raw(*v);
}

void encode(Writer& w, DateTime v) { w.i64(v.ticks); }

void encode(Writer& w, const Guid& v)
{
    w.u32(v.data1);
    w.u16(v.data2);
    w.u16(v.data3);
    w.raw(v.data4);
}

void encode(Writer& w, const NodeId& v)
{
    std::visit(
        [&](const auto& id) {
            using T = std::decay_t<decltype(id)>;
            if constexpr (std::is_same_v<T, std::uint32_t>) {
                if (v.namespace_index == 0 && id <= 0xFF) {
                    w.u8(0x00);
                    w.u8(static_cast<std::uint8_t>(id));
                } else if (v.namespace_index <= 0xFF && id <= 0xFFFF) {
                    w.u8(0x01);
                    w.u8(static_cast<std::uint8_t>(v.namespace_index));
                    w.u16(static_cast<std::uint16_t>(id));
                } else {
                    w.u8(0x02);
                    w.u16(v.namespace_index);
                    w.u32(id);
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                w.u8(0x03);
                w.u16(v.namespace_index);
                encode(w, UaString(id));
            } else if constexpr (std::is_same_v<T, Guid>) {
                w.u8(0x04);
                w.u16(v.namespace_index);
                encode(w, id);
            } else {
                w.u8(0x05);
                w.u16(v.namespace_index);
                encode(w, UaByteString(id));
            }
        },
        v.identifier);
}

void encode(Writer& w, StatusCode v) { w.u32(v.value); }

void encode(Writer& w, const QualifiedName& v)
{
    w.u16(v.namespace_index);
    encode(w, v.name);
}

void encode(Writer& w, const LocalizedText& v)
{
    std::uint8_t mask = 0;
    if (v.locale) mask |= 0x01;
    if (v.text) mask |= 0x02;
    w.u8(mask);
    if (v.locale) encode(w, v.locale);
    if (v.text) encode(w, v.text);
}

void encode(Writer& w, const ExtensionObject& v)
{
    encode(w, v.type_id);
    if (!v.body) {
        w.u8(0x00);
        return;
    }
    w.u8(0x01);
    encode(w, UaByteString(*v.body));
}

namespace {

constexpr BuiltinType scalar_types[] = {
    BuiltinType::Null,       BuiltinType::Boolean,  BuiltinType::SByte,         BuiltinType::Byte,
    BuiltinType::Int16,      BuiltinType::UInt16,   BuiltinType::Int32,         BuiltinType::UInt32,
    BuiltinType::Int64,      BuiltinType::UInt64,   BuiltinType::Float,         BuiltinType::Double,
    BuiltinType::String,     BuiltinType::DateTime, BuiltinType::Guid,          BuiltinType::ByteString,
    BuiltinType::NodeId,     BuiltinType::StatusCode, BuiltinType::QualifiedName, BuiltinType::LocalizedText,
};
static_assert(std::size(scalar_types) == std::variant_size_v<Scalar>);

void encode_scalar(Writer& w, const Scalar& s)
{
    std::visit(
        [&w](const auto& v) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(v)>, std::monostate>) encode(w, v);
        },
        s);
}

template <std::size_t I = 0>
Scalar decode_scalar_at(Reader& r, std::size_t index)
{
    if constexpr (I < std::variant_size_v<Scalar>) {
        if (index == I) {
            using T = std::variant_alternative_t<I, Scalar>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return std::monostate{};
            } else {
                T v{};
                decode(r, v);
                return v;
            }
        }
        return decode_scalar_at<I + 1>(r, index);
    } else {
        throw CodecError(CodecErrc::UnsupportedKind, "scalar index out of range");
    }
}

std::size_t scalar_index_of(BuiltinType t)
{
    for (std::size_t i = 0; i < std::size(scalar_types); ++i)
        if (scalar_types[i] == t) return i;
    throw CodecError(CodecErrc::UnsupportedKind, "builtin type " + std::to_string(static_cast<int>(t)));
}

Scalar decode_scalar(Reader& r, BuiltinType t) { return decode_scalar_at(r, scalar_index_of(t)); }

}  // namespace

BuiltinType builtin_type_of(const Scalar& s) { return scalar_types[s.index()]; }

bool is_supported_scalar_type(BuiltinType t)
{
    for (auto s : scalar_types)
        if (s == t) return true;
    return false;
}

Variant Variant::array(BuiltinType element_type, std::vector<Scalar> elements)
{
    if (element_type == BuiltinType::Null || !is_supported_scalar_type(element_type))
        throw CodecError(CodecErrc::UnsupportedKind, "unsupported array element type");
    for (const auto& e : elements)
        if (builtin_type_of(e) != element_type)
            throw CodecError(CodecErrc::UnsupportedKind, "array element type mismatch");
    Variant v;
    v.type_ = element_type;
    v.is_array_ = true;
    v.values_ = std::move(elements);
    return v;
}

const Scalar& Variant::scalar() const
{
    static const Scalar null_scalar;
    if (is_array_ || values_.empty()) return null_scalar;
    return values_.front();
}

namespace {
std::string scalar_to_string(const Scalar& s)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "null";
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::int8_t> || std::is_same_v<T, std::uint8_t>)
                return std::to_string(static_cast<int>(v));
            else if constexpr (std::is_arithmetic_v<T>) {
                std::ostringstream os;
                os << v;
                return os.str();
            } else if constexpr (std::is_same_v<T, UaString>) return v ? sanitize_utf8(*v) : "null";
            else if constexpr (std::is_same_v<T, UaByteString>) return v ? to_hex(*v) : "null";
            else if constexpr (std::is_same_v<T, DateTime>) return std::to_string(v.ticks);
            else if constexpr (std::is_same_v<T, Guid>) return to_hex(encode_to_bytes(v));
            else if constexpr (std::is_same_v<T, NodeId>) return v.to_string();
            else if constexpr (std::is_same_v<T, StatusCode>) return status_name(v);
            else if constexpr (std::is_same_v<T, QualifiedName>)
                return std::to_string(v.namespace_index) + ":" + (v.name ? sanitize_utf8(*v.name) : "");
            else return v.text ? sanitize_utf8(*v.text) : "";
        },
        s);
}
}  // namespace

std::string Variant::to_string() const
{
    if (!is_array_) return scalar_to_string(scalar());
    std::string out = "[";
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (i) out += ", ";
        out += scalar_to_string(values_[i]);
    }
    return out + "]";
}

void encode(Writer& w, const Variant& v)
{
    if (v.is_null()) {
        w.u8(0);
        return;
    }
    std::uint8_t mask = static_cast<std::uint8_t>(v.type());
    if (v.is_array()) {
        w.u8(mask | 0x80);
        w.i32(static_cast<std::int32_t>(v.elements().size()));
        for (const auto& e : v.elements()) encode_scalar(w, e);
    } else {
        w.u8(mask);
        encode_scalar(w, v.scalar());
    }
}

void encode(Writer& w, const DataValue& v)
{
    std::uint8_t mask = 0;
    if (v.value) mask |= 0x01;
    if (v.status) mask |= 0x02;
    if (v.source_timestamp) mask |= 0x04;
    if (v.server_timestamp) mask |= 0x08;
    if (v.source_picoseconds) mask |= 0x10;
    if (v.server_picoseconds) mask |= 0x20;
    w.u8(mask);
    if (v.value) encode(w, *v.value);
    if (v.status) encode(w, *v.status);
    if (v.source_timestamp) encode(w, *v.source_timestamp);
    if (v.source_picoseconds) w.u16(*v.source_picoseconds);
    if (v.server_timestamp) encode(w, *v.server_timestamp);
    if (v.server_picoseconds) w.u16(*v.server_picoseconds);
}

void encode(Writer& w, const DiagnosticInfo& v)
{
    std::uint8_t mask = 0;
    if (v.symbolic_id) mask |= 0x01;
    if (v.namespace_uri) mask |= 0x02;
    if (v.localized_text) mask |= 0x04;
    if (v.locale) mask |= 0x08;
    if (v.additional_info) mask |= 0x10;
    if (v.inner_status_code) mask |= 0x20;
    if (!v.inner.empty()) mask |= 0x40;
    w.u8(mask);
    if (v.symbolic_id) w.i32(*v.symbolic_id);
    if (v.namespace_uri) w.i32(*v.namespace_uri);
    if (v.locale) w.i32(*v.locale);
    if (v.localized_text) w.i32(*v.localized_text);
    if (v.additional_info) encode(w, UaString(*v.additional_info));
    if (v.inner_status_code) encode(w, *v.inner_status_code);
    if (!v.inner.empty()) encode(w, v.inner.front());
}

// ---- decoders ----

void decode(Reader& r, bool& v) { v = r.u8() != 0; }
void decode(Reader& r, std::int8_t& v) { v = r.i8(); }
void decode(Reader& r, std::uint8_t& v) { v = r.u8(); }
void decode(Reader& r, std::int16_t& v) { v = r.i16(); }
void decode(Reader& r, std::uint16_t& v) { v = r.u16(); }
void decode(Reader& r, std::int32_t& v) { v = r.i32(); }
void decode(Reader& r, std::uint32_t& v) { v = r.u32(); }
void decode(Reader& r, std::int64_t& v) { v = r.i64(); }
void decode(Reader& r, std::uint64_t& v) { v = r.u64(); }
void decode(Reader& r, float& v) { v = r.f32(); }
void decode(Reader& r, double& v) { v = r.f64(); }

namespace {
std::optional<std::size_t> decode_length(Reader& r)
{
    const std::int32_t len = r.i32();
    if (len == -1) return std::nullopt;
    if (len < 0) throw CodecError(CodecErrc::Malformed, "negative length " + std::to_string(len));
    if (static_cast<std::size_t>(len) > r.remaining())
        throw CodecError(CodecErrc::Truncated, "length " + std::to_string(len) + " exceeds input");
    return static_cast<std::size_t>(len);
}
}  // namespace

void decode(Reader& r, UaString& v)
{
    auto len = decode_length(r);
    if (!len) {
        v.reset();
        return;
    }
    auto bytes = r.take(*len);
    v = std::string(bytes.begin(), bytes.end());
}

void decode(Reader& r, UaByteString& v)
{
    auto len = decode_length(r);
    if (!len) {
        v.reset();
        return;
    }
    auto bytes = r.take(*len);
    v = Bytes(bytes.begin(), bytes.end());
}

void decode(Reader& r, DateTime& v) { v.ticks = r.i64(); }

void decode(Reader& r, Guid& v)
{
    v.data1 = r.u32();
    v.data2 = r.u16();
    v.data3 = r.u16();
    auto tail = r.take(8);
    std::copy(tail.begin(), tail.end(), v.data4.begin());
}

void decode(Reader& r, NodeId& v)
{
    const std::uint8_t form = r.u8();
    switch (form) {
    case 0x00:
        v.namespace_index = 0;
        v.identifier = std::uint32_t{r.u8()};
        break;
    case 0x01:
        v.namespace_index = r.u8();
        v.identifier = std::uint32_t{r.u16()};
        break;
    case 0x02:
        v.namespace_index = r.u16();
        v.identifier = r.u32();
        break;
    case 0x03: {
        v.namespace_index = r.u16();
        UaString s;
        decode(r, s);
        v.identifier = s.value_or(std::string{});
        break;
    }
    case 0x04: {
        v.namespace_index = r.u16();
        Guid g;
        decode(r, g);
        v.identifier = g;
        break;
    }
    case 0x05: {
        v.namespace_index = r.u16();
        UaByteString b;
        decode(r, b);
        v.identifier = b.value_or(Bytes{});
        break;
    }
    default:
        // 0x40/0x80 flags belong to ExpandedNodeId, which is not part of the supported subset
        throw CodecError(CodecErrc::Malformed, "NodeId encoding byte " + std::to_string(form));
    }
}

void decode(Reader& r, StatusCode& v) { v.value = r.u32(); }

void decode(Reader& r, QualifiedName& v)
{
    v.namespace_index = r.u16();
    decode(r, v.name);
}

void decode(Reader& r, LocalizedText& v)
{
    const std::uint8_t mask = r.u8();
    if (mask & ~0x03) throw CodecError(CodecErrc::Malformed, "LocalizedText mask");
    v = {};
    if (mask & 0x01) {
        decode(r, v.locale);
        if (!v.locale) v.locale = std::string{};
    }
    if (mask & 0x02) {
        decode(r, v.text);
        if (!v.text) v.text = std::string{};
    }
}

void decode(Reader& r, ExtensionObject& v)
{
    decode(r, v.type_id);
    const std::uint8_t encoding = r.u8();
    if (encoding == 0x00) {
        v.body.reset();
    } else if (encoding == 0x01) {
        UaByteString b;
        decode(r, b);
        v.body = b.value_or(Bytes{});
    } else if (encoding == 0x02) {
        throw CodecError(CodecErrc::UnsupportedKind, "XML-encoded ExtensionObject");
    } else {
        throw CodecError(CodecErrc::Malformed, "ExtensionObject encoding byte");
    }
}

std::size_t decode_array_length(Reader& r)
{
    const std::int32_t len = r.i32();
    if (len == -1) return 0;
    if (len < 0) throw CodecError(CodecErrc::Malformed, "negative array length");
    if (static_cast<std::size_t>(len) > kMaxArrayLength)
        throw CodecError(CodecErrc::Malformed, "array length " + std::to_string(len) + " above cap");
    // every element takes at least one byte
    if (static_cast<std::size_t>(len) > r.remaining())
        throw CodecError(CodecErrc::Truncated, "array length exceeds input");
    return static_cast<std::size_t>(len);
}

void decode(Reader& r, Variant& v)
{
    const std::uint8_t mask = r.u8();
    const auto type = static_cast<BuiltinType>(mask & 0x3F);
    if (mask & 0x40) throw CodecError(CodecErrc::UnsupportedKind, "multi-dimensional Variant arrays");
    if (!is_supported_scalar_type(type))
        throw CodecError(CodecErrc::UnsupportedKind, "Variant type " + std::to_string(mask & 0x3F));
    if (mask & 0x80) {
        if (type == BuiltinType::Null) throw CodecError(CodecErrc::Malformed, "array of Null");
        const std::size_t n = decode_array_length(r);
        std::vector<Scalar> items;
        items.reserve(n);
        for (std::size_t i = 0; i < n; ++i) items.push_back(decode_scalar(r, type));
        v = Variant::array(type, std::move(items));
    } else if (type == BuiltinType::Null) {
        v = Variant{};
    } else {
        v = Variant(decode_scalar(r, type));
    }
}

void decode(Reader& r, DataValue& v)
{
    const std::uint8_t mask = r.u8();
    if (mask & 0xC0) throw CodecError(CodecErrc::Malformed, "DataValue mask");
    v = {};
    if (mask & 0x01) {
        Variant value;
        decode(r, value);
        v.value = std::move(value);
    }
    if (mask & 0x02) v.status = StatusCode{r.u32()};
    if (mask & 0x04) v.source_timestamp = DateTime{r.i64()};
    if (mask & 0x10) v.source_picoseconds = r.u16();
    if (mask & 0x08) v.server_timestamp = DateTime{r.i64()};
    if (mask & 0x20) v.server_picoseconds = r.u16();
}

void decode(Reader& r, DiagnosticInfo& v)
{
    const std::uint8_t mask = r.u8();
    if (mask & 0x80) throw CodecError(CodecErrc::Malformed, "DiagnosticInfo mask");
    v = {};
    if (mask & 0x01) v.symbolic_id = r.i32();
    if (mask & 0x02) v.namespace_uri = r.i32();
    if (mask & 0x08) v.locale = r.i32();
    if (mask & 0x04) v.localized_text = r.i32();
    if (mask & 0x10) {
        UaString s;
        decode(r, s);
        v.additional_info = s.value_or(std::string{});
    }
    if (mask & 0x20) v.inner_status_code = StatusCode{r.u32()};
    if (mask & 0x40) {
        if (++r.depth > kMaxDiagnosticDepth) throw CodecError(CodecErrc::Malformed, "DiagnosticInfo nesting");
        DiagnosticInfo inner;
        decode(r, inner);
        --r.depth;
        v.inner.push_back(std::move(inner));
    }
}

Bytes encode_builtin(const Variant& value)
{
    Bytes out;
    Writer w(out);
    if (value.is_array()) {
        w.i32(static_cast<std::int32_t>(value.elements().size()));
        for (const auto& e : value.elements()) encode_scalar(w, e);
    } else {
        if (value.is_null()) throw CodecError(CodecErrc::UnsupportedKind, "Null has no raw encoding");
        encode_scalar(w, value.scalar());
    }
    return out;
}

std::pair<Variant, std::size_t> decode_builtin(ByteView bytes, BuiltinType kind, bool array)
{
    if (kind == BuiltinType::Null || !is_supported_scalar_type(kind))
        throw CodecError(CodecErrc::UnsupportedKind, "builtin type " + std::to_string(static_cast<int>(kind)));
    Reader r(bytes);
    if (array) {
        const std::size_t n = decode_array_length(r);
        std::vector<Scalar> items;
        items.reserve(n);
        for (std::size_t i = 0; i < n; ++i) items.push_back(decode_scalar(r, kind));
        return {Variant::array(kind, std::move(items)), r.position()};
    }
    return {Variant(decode_scalar(r, kind)), r.position()};
}

}  // namespace uatrust::codec
