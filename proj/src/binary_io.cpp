#include "ditchkit/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "ditchkit/error.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace ditchkit::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t crc) {
    uLong c = crc;
    const std::uint8_t* p = bytes.data();
    std::size_t n = bytes.size();
    while (n > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        c = ::crc32(c, p, chunk);
        p += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

std::uint32_t crc32(std::span<const float> values, std::uint32_t crc) {
    return crc32(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(values.data()),
                                               values.size_bytes()),
                 crc);
}

namespace {

template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
}

}  // namespace

void ByteWriter::bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
void ByteWriter::u32(std::uint32_t v) { put(buf_, v); }
void ByteWriter::f32(float v) { put(buf_, v); }
void ByteWriter::f64(double v) { put(buf_, v); }

void ByteWriter::f32s(std::span<const float> v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
}

void ByteWriter::f64s(std::span<const double> v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
}

void ByteReader::need(std::size_t n) const {
    if (n > remaining())
        throw FormatError(FormatErrc::truncated, "unexpected end of data at byte " + std::to_string(pos_));
}

std::string ByteReader::bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

float ByteReader::f32() {
    need(4);
    float v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

double ByteReader::f64() {
    need(8);
    double v;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    return v;
}

void ByteReader::f32s(std::span<float> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}

void ByteReader::f64s(std::span<double> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw FormatError(FormatErrc::io, "read failed: " + path.string());
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::io, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(FormatErrc::io, "write failed: " + path.string());
}

void expect_header(ByteReader& r, std::string_view magic, std::uint32_t version) {
    if (r.remaining() < magic.size()) throw FormatError(FormatErrc::truncated, "file shorter than its header");
    if (r.bytes(magic.size()) != magic)
        throw FormatError(FormatErrc::bad_magic, "bad magic, expected " + std::string(magic));
    const std::uint32_t v = r.u32();
    if (v != version)
        throw FormatError(FormatErrc::version_mismatch,
                          std::string(magic) + " version " + std::to_string(v) + " (supported: " +
                              std::to_string(version) + ")");
}

}  // namespace ditchkit::io
