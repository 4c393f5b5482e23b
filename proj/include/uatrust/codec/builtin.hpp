#pragma once

// OPC UA binary encoding of the built-in types (little-endian, length-prefixed strings and
// arrays, -1 length for null values).

#include "uatrust/common/bytes.hpp"
#include "uatrust/common/status.hpp"

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace uatrust::codec {

enum class CodecErrc {
    Truncated,
    Malformed,
    UnsupportedKind,
    BodyTooLarge,
    SequenceGap,
    MixedRequestIds,
    AbortReceived,
};

const char* to_string(CodecErrc code);

class CodecError : public std::runtime_error {
public:
    CodecError(CodecErrc code, const std::string& what);
    CodecErrc code() const noexcept { return code_; }

private:
    CodecErrc code_;
};

inline constexpr std::size_t kMaxArrayLength = 1u << 16;
inline constexpr int kMaxDiagnosticDepth = 4;

using UaString = std::optional<std::string>;
using UaByteString = std::optional<Bytes>;

// 100 ns intervals since 1601-01-01 UTC.
struct DateTime {
    std::int64_t ticks = 0;

    static DateTime now();
    friend constexpr auto operator<=>(DateTime, DateTime) = default;
};

struct Guid {
    std::uint32_t data1 = 0;
    std::uint16_t data2 = 0;
    std::uint16_t data3 = 0;
    std::array<std::uint8_t, 8> data4{};

    friend constexpr auto operator<=>(const Guid&, const Guid&) = default;
};

struct NodeId {
    std::uint16_t namespace_index = 0;
    std::variant<std::uint32_t, std::string, Guid, Bytes> identifier = std::uint32_t{0};

    static NodeId numeric(std::uint16_t ns, std::uint32_t id) { return {ns, id}; }
    static NodeId string(std::uint16_t ns, std::string id) { return {ns, std::move(id)}; }
    static NodeId opaque(std::uint16_t ns, Bytes id) { return {ns, std::move(id)}; }

    bool is_null() const;
    // "ns=1;s=setpoint", "i=2258", "ns=1;b=<hex>", "ns=2;g=<hex>"
    std::string to_string() const;
    // Inverse of to_string; throws std::invalid_argument.
    static NodeId parse(std::string_view text);

    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend auto operator<=>(const NodeId& a, const NodeId& b)
    {
        if (auto c = a.namespace_index <=> b.namespace_index; c != 0) return c;
        if (auto c = a.identifier.index() <=> b.identifier.index(); c != 0) return c;
        return a.identifier < b.identifier ? std::strong_ordering::less
               : a.identifier == b.identifier ? std::strong_ordering::equal
                                              : std::strong_ordering::greater;
    }
};

struct QualifiedName {
    std::uint16_t namespace_index = 0;
    UaString name;

    friend bool operator==(const QualifiedName&, const QualifiedName&) = default;
};

struct LocalizedText {
    UaString locale;
    UaString text;

    static LocalizedText of(std::string text) { return {std::nullopt, std::move(text)}; }
    friend bool operator==(const LocalizedText&, const LocalizedText&) = default;
};

// Body absent encodes as encoding byte 0x00; present as 0x01 (binary). XML bodies are not supported.
struct ExtensionObject {
    NodeId type_id;
    std::optional<Bytes> body;

    friend bool operator==(const ExtensionObject&, const ExtensionObject&) = default;
};

enum class BuiltinType : std::uint8_t {
    Null = 0,
    Boolean = 1,
    SByte = 2,
    Byte = 3,
    Int16 = 4,
    UInt16 = 5,
    Int32 = 6,
    UInt32 = 7,
    Int64 = 8,
    UInt64 = 9,
    Float = 10,
    Double = 11,
    String = 12,
    DateTime = 13,
    Guid = 14,
    ByteString = 15,
    XmlElement = 16,
    NodeId = 17,
    ExpandedNodeId = 18,
    StatusCode = 19,
    QualifiedName = 20,
    LocalizedText = 21,
    ExtensionObject = 22,
    DataValue = 23,
    Variant = 24,
    DiagnosticInfo = 25,
};

// Alternatives are in the order of their builtin type ids; see builtin_type_of().
using Scalar = std::variant<std::monostate, bool, std::int8_t, std::uint8_t, std::int16_t, std::uint16_t,
                            std::int32_t, std::uint32_t, std::int64_t, std::uint64_t, float, double, UaString,
                            DateTime, Guid, UaByteString, NodeId, StatusCode, QualifiedName, LocalizedText>;

BuiltinType builtin_type_of(const Scalar& s);
bool is_supported_scalar_type(BuiltinType t);

// A scalar or a one-dimensional array of a single built-in type.
class Variant {
public:
    Variant() = default;
    Variant(Scalar value) : type_(builtin_type_of(value))
    {
        if (type_ != BuiltinType::Null) values_.push_back(std::move(value));
    }
    template <class T>
        requires std::is_constructible_v<Scalar, T> && (!std::is_same_v<std::decay_t<T>, Scalar>) &&
                 (!std::is_same_v<std::decay_t<T>, Variant>)
    Variant(T value) : Variant(Scalar(std::move(value)))
    {
    }
    Variant(const char* text) : Variant(Scalar(UaString(text))) {}

    // Throws CodecError(UnsupportedKind) when an element does not have the element type.
    static Variant array(BuiltinType element_type, std::vector<Scalar> elements);

    BuiltinType type() const { return type_; }
    bool is_array() const { return is_array_; }
    bool is_null() const { return type_ == BuiltinType::Null && !is_array_; }
    const Scalar& scalar() const;
    const std::vector<Scalar>& elements() const { return values_; }

    template <class T>
    const T* get_if() const
    {
        if (is_array_ || values_.empty()) return nullptr;
        return std::get_if<T>(&values_.front());
    }

    std::string to_string() const;

    friend bool operator==(const Variant&, const Variant&) = default;

private:
    BuiltinType type_ = BuiltinType::Null;
    bool is_array_ = false;
    std::vector<Scalar> values_;
};

struct DataValue {
    std::optional<Variant> value;
    std::optional<StatusCode> status;
    std::optional<DateTime> source_timestamp;
    std::optional<std::uint16_t> source_picoseconds;
    std::optional<DateTime> server_timestamp;
    std::optional<std::uint16_t> server_picoseconds;

    friend bool operator==(const DataValue&, const DataValue&) = default;
};

struct DiagnosticInfo {
    std::optional<std::int32_t> symbolic_id;
    std::optional<std::int32_t> namespace_uri;
    std::optional<std::int32_t> locale;
    std::optional<std::int32_t> localized_text;
    std::optional<std::string> additional_info;
    std::optional<StatusCode> inner_status_code;
    std::vector<DiagnosticInfo> inner;  // zero or one element

    friend bool operator==(const DiagnosticInfo&, const DiagnosticInfo&) = default;
};

class Writer {
public:
    explicit Writer(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void i8(std::int8_t v) { u8(static_cast<std::uint8_t>(v)); }
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(ByteView data) { append(out_, data); }

    Bytes& buffer() { return out_; }
    std::size_t size() const { return out_.size(); }

private:
    template <class T>
    void put_le(T v)
    {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes& out_;
};

class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    std::uint8_t u8() { return get_le<std::uint8_t>(); }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    ByteView take(std::size_t n);
    Bytes take_remaining();

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

    int depth = 0;

private:
    template <class T>
    T get_le()
    {
        auto bytes = take(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes[i]) << (8 * i));
        return v;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

// Built-in encoders. Enums are encoded as Int32.
void encode(Writer& w, bool v);
void encode(Writer& w, std::int8_t v);
void encode(Writer& w, std::uint8_t v);
void encode(Writer& w, std::int16_t v);
void encode(Writer& w, std::uint16_t v);
void encode(Writer& w, std::int32_t v);
void encode(Writer& w, std::uint32_t v);
void encode(Writer& w, std::int64_t v);
void encode(Writer& w, std::uint64_t v);
void encode(Writer& w, float v);
void encode(Writer& w, double v);
void encode(Writer& w, const UaString& v);
void encode(Writer& w, const UaByteString& v);
void encode(Writer& w, DateTime v);
void encode(Writer& w, const Guid& v);
void encode(Writer& w, const NodeId& v);
void encode(Writer& w, StatusCode v);
void encode(Writer& w, const QualifiedName& v);
void encode(Writer& w, const LocalizedText& v);
void encode(Writer& w, const ExtensionObject& v);
void encode(Writer& w, const Variant& v);
void encode(Writer& w, const DataValue& v);
void encode(Writer& w, const DiagnosticInfo& v);

void decode(Reader& r, bool& v);
void decode(Reader& r, std::int8_t& v);
void decode(Reader& r, std::uint8_t& v);
void decode(Reader& r, std::int16_t& v);
void decode(Reader& r, std::uint16_t& v);
void decode(Reader& r, std::int32_t& v);
void decode(Reader& r, std::uint32_t& v);
void decode(Reader& r, std::int64_t& v);
void decode(Reader& r, std::uint64_t& v);
void decode(Reader& r, float& v);
void decode(Reader& r, double& v);
void decode(Reader& r, UaString& v);
void decode(Reader& r, UaByteString& v);
void decode(Reader& r, DateTime& v);
void decode(Reader& r, Guid& v);
void decode(Reader& r, NodeId& v);
void decode(Reader& r, StatusCode& v);
void decode(Reader& r, QualifiedName& v);
void decode(Reader& r, LocalizedText& v);
void decode(Reader& r, ExtensionObject& v);
void decode(Reader& r, Variant& v);
void decode(Reader& r, DataValue& v);
void decode(Reader& r, DiagnosticInfo& v);

// Reads an array length prefix; -1 (null) is returned as 0.
std::size_t decode_array_length(Reader& r);

template <class T>
concept FieldStruct = requires(T& t) { t.tie(); };

template <class E>
    requires std::is_enum_v<E>
void encode(Writer& w, E v)
{
    w.i32(static_cast<std::int32_t>(v));
}

template <class E>
    requires std::is_enum_v<E>
void decode(Reader& r, E& v)
{
    v = static_cast<E>(r.i32());
}

template <class T>
void encode(Writer& w, const std::vector<T>& items);
template <class T>
void decode(Reader& r, std::vector<T>& items);

template <FieldStruct T>
void encode(Writer& w, const T& v)
{
    std::apply([&w](const auto&... field) { (encode(w, field), ...); }, v.tie());
}

template <FieldStruct T>
void decode(Reader& r, T& v)
{
    std::apply([&r](auto&... field) { (decode(r, field), ...); }, v.tie());
}

// Empty arrays are written with length 0; a null array on the wire decodes as empty.
template <class T>
void encode(Writer& w, const std::vector<T>& items)
{
    w.i32(static_cast<std::int32_t>(items.size()));
    for (const auto& item : items) encode(w, item);
}

template <class T>
void decode(Reader& r, std::vector<T>& items)
{
    const std::size_t n = decode_array_length(r);
    items.clear();
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        T item{};
        decode(r, item);
        items.push_back(std::move(item));
    }
}

template <class T>
Bytes encode_to_bytes(const T& v)
{
    Bytes out;
    Writer w(out);
    encode(w, v);
    return out;
}

// Decodes exactly one value; trailing bytes are Malformed.
template <class T>
T decode_exact(ByteView data)
{
    Reader r(data);
    T v{};
    decode(r, v);
    if (!r.at_end()) throw CodecError(CodecErrc::Malformed, "trailing bytes after value");
    return v;
}

// Raw built-in encoding of a value (no Variant encoding mask). Arrays are written as a length
// prefix followed by the elements.
Bytes encode_builtin(const Variant& value);

// Decodes one value of the given kind (or an array of it) and reports the bytes consumed.
std::pair<Variant, std::size_t> decode_builtin(ByteView bytes, BuiltinType kind, bool array = false);

}  // namespace uatrust::codec

#define UATRUST_FIELDS(...)                                 \
    auto tie() { return std::tie(__VA_ARGS__); }            \
    auto tie() const { return std::tie(__VA_ARGS__); }
