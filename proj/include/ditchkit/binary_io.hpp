#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ditchkit::io {

/// zlib CRC-32 (IEEE polynomial), optionally continuing from `crc`.
std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t crc = 0);
std::uint32_t crc32(std::span<const float> values, std::uint32_t crc = 0);

/// Little-endian byte sink.
class ByteWriter {
public:
    void bytes(std::string_view s);
    void u32(std::uint32_t v);
    void f32(float v);
    void f64(double v);
    void f32s(std::span<const float> v);
    void f64s(std::span<const double> v);

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Little-endian byte source over an in-memory file image. Reading past the end
/// throws FormatError(truncated).
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data) : data_(std::move(data)) {}

    std::string bytes(std::size_t n);
    std::uint32_t u32();
    float f32();
    double f64();
    void f32s(std::span<float> out);
    void f64s(std::span<double> out);

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::span<const std::uint8_t> consumed() const noexcept { return {data_.data(), pos_}; }

private:
    void need(std::size_t n) const;

    std::vector<std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Reads the 4-byte magic and the version word; throws bad_magic / version_mismatch.
void expect_header(ByteReader& r, std::string_view magic, std::uint32_t version);

}  // namespace ditchkit::io
