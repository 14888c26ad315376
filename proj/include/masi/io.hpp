#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace masi::io {

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

/// Little-endian byte sink with length-prefixed strings.
class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v);
    void str(const std::string& s);
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    const std::vector<std::uint8_t>& data() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader; overruns raise CorruptionError.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64();
    std::string str();
    std::vector<std::uint8_t> bytes(std::size_t n);
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) const;
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

enum class FileKind : std::uint8_t { Dictionary = 1, Dataset = 2, Checkpoint = 3 };

using Sections = std::vector<std::pair<std::string, std::vector<std::uint8_t>>>;

/// Writes magic, kind, a section table and a trailing FNV-1a digest.
void write_sections(const std::string& path, FileKind kind, const Sections& sections);

/// Verifies magic, kind and digest; truncation or mismatch raises
/// CorruptionError, a wrong kind raises CompatibilityError.
std::map<std::string, std::vector<std::uint8_t>> read_sections(const std::string& path,
                                                               FileKind expected_kind);

} // namespace masi::io
