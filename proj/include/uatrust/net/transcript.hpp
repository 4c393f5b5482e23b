#pragma once

// Capture of raw traffic as (direction, timestamp, bytes) records.
// File layout: "UATR", u8 version (1), then records of u8 direction, i64 LE microseconds since
// the Unix epoch, u32 LE length, bytes.

#include "uatrust/common/bytes.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace uatrust::net {

enum class Direction : std::uint8_t { Sent = 0, Received = 1 };

struct TranscriptRecord {
    Direction direction = Direction::Sent;
    std::int64_t timestamp_us = 0;
    Bytes data;

    friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

class Transcript {
public:
    explicit Transcript(std::string label = {}) : label_(std::move(label)) {}

    const std::string& label() const { return label_; }
    void record(Direction direction, ByteView data);
    std::vector<TranscriptRecord> records() const;

    std::uint64_t total_bytes(Direction direction) const;
    // Records whose payload starts with the given 3-byte message tag.
    std::size_t count_tagged(Direction direction, std::string_view tag) const;
    // Whether any byte sequence in the given direction contains needle (chunk-local search).
    bool contains_bytes(Direction direction, ByteView needle) const;

    void save(const std::filesystem::path& path) const;
    // Errors: std::runtime_error on a bad magic, version or truncated record.
    static std::shared_ptr<Transcript> load(const std::filesystem::path& path);

private:
    std::string label_;
    mutable std::mutex mutex_;
    std::vector<TranscriptRecord> records_;
};

}  // namespace uatrust::net
