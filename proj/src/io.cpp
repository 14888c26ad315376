#include "masi/io.hpp"

#include <cstring>
#include <fstream>

#include "masi/errors.hpp"

namespace masi::io {

namespace {
constexpr char kMagic[5] = {'M', 'A', 'S', 'I', '1'};
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
}

void Writer::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void Reader::need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
        throw CorruptionError("truncated payload: wanted " + std::to_string(n) + " bytes, " +
                              std::to_string(data_.size() - pos_) + " left");
    }
}

std::uint8_t Reader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint32_t Reader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
}

std::uint64_t Reader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
}

double Reader::f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string Reader::str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::vector<std::uint8_t> Reader::bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return out;
}

void write_sections(const std::string& path, FileKind kind, const Sections& sections) {
    Writer w;
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kMagic), 5));
    w.u8(static_cast<std::uint8_t>(kind));
    w.u32(static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, payload] : sections) {
        w.str(name);
        w.u64(payload.size());
        w.bytes(payload);
    }
    const std::uint64_t digest = fnv1a(w.data());
    w.u64(digest);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    const auto& buf = w.data();
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failed: " + path);
}

std::map<std::string, std::vector<std::uint8_t>> read_sections(const std::string& path,
                                                               FileKind expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for reading: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 5 + 1 + 4 + 8) throw CorruptionError("file too short: " + path);

    const std::uint64_t stored = [&] {
        Reader tail(std::span<const std::uint8_t>(buf.data() + buf.size() - 8, 8));
        return tail.u64();
    }();
    const std::uint64_t computed =
        fnv1a(std::span<const std::uint8_t>(buf.data(), buf.size() - 8));
    if (stored != computed) {
        throw CorruptionError("digest mismatch in " + path);
    }

    Reader r(std::span<const std::uint8_t>(buf.data(), buf.size() - 8));
    for (char c : kMagic) {
        if (r.u8() != static_cast<std::uint8_t>(c)) throw CorruptionError("bad magic in " + path);
    }
    const auto kind = r.u8();
    if (kind != static_cast<std::uint8_t>(expected_kind)) {
        throw CompatibilityError("wrong file kind in " + path + ": got " + std::to_string(kind) +
                                 ", expected " + std::to_string(static_cast<int>(expected_kind)));
    }
    const std::uint32_t count = r.u32();
    std::map<std::string, std::vector<std::uint8_t>> sections;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str();
        const std::uint64_t len = r.u64();
        sections.emplace(std::move(name), r.bytes(len));
    }
    return sections;
}

} // namespace masi::io
