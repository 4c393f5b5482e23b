#include "uatrust/net/transcript.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uatrust::net {

namespace {

constexpr char kMagic[4] = {'U', 'A', 'T', 'R'};
constexpr std::uint8_t kVersion = 1;

template <class T>
void put_le(std::ostream& out, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(std::istream& in)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = in.get();
        if (c == EOF) throw std::runtime_error("transcript truncated");
        v |= static_cast<std::uint64_t>(c) << (8 * i);
    }
    return static_cast<T>(v);
}

}  // namespace

void Transcript::record(Direction direction, ByteView data)
{
    const auto now = std::chrono::duration_cast<std::chrono::microseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    std::lock_guard lock(mutex_);
    records_.push_back({direction, now, Bytes(data.begin(), data.end())});
}

std::vector<TranscriptRecord> Transcript::records() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::uint64_t Transcript::total_bytes(Direction direction) const
{
    std::lock_guard lock(mutex_);
    std::uint64_t n = 0;
    for (const auto& r : records_)
        if (r.direction == direction) n += r.data.size();
    return n;
}

std::size_t Transcript::count_tagged(Direction direction, std::string_view tag) const
{
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& r : records_)
        if (r.direction == direction && r.data.size() >= tag.size() &&
            std::memcmp(r.data.data(), tag.data(), tag.size()) == 0)
            ++n;
    return n;
}

bool Transcript::contains_bytes(Direction direction, ByteView needle) const
{
    std::lock_guard lock(mutex_);
    for (const auto& r : records_)
        if (r.direction == direction && contains(r.data, needle)) return true;
    return false;
}

void Transcript::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write transcript " + path.string());
    out.write(kMagic, sizeof kMagic);
    out.put(static_cast<char>(kVersion));
    std::lock_guard lock(mutex_);
    for (const auto& r : records_) {
        out.put(static_cast<char>(r.direction));
        put_le<std::int64_t>(out, r.timestamp_us);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.data.size()));
        out.write(reinterpret_cast<const char*>(r.data.data()), static_cast<std::streamsize>(r.data.size()));
    }
}

std::shared_ptr<Transcript> Transcript::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read transcript " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a transcript file");
    if (in.get() != kVersion) throw std::runtime_error("unsupported transcript version");
    auto t = std::make_shared<Transcript>(path.stem().string());
    while (in.peek() != EOF) {
        TranscriptRecord r;
        const int dir = in.get();
        if (dir != 0 && dir != 1) throw std::runtime_error("bad transcript direction");
        r.direction = static_cast<Direction>(dir);
        r.timestamp_us = get_le<std::int64_t>(in);
        const auto len = get_le<std::uint32_t>(in);
        r.data.resize(len);
        in.read(reinterpret_cast<char*>(r.data.data()), len);
        if (static_cast<std::uint32_t>(in.gcount()) != len) throw std::runtime_error("transcript truncated");
        t->records_.push_back(std::move(r));
    }
    return t;
}

}  // namespace uatrust::net
