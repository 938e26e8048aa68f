#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtvg {

/// Little-endian append-only byte buffer.
class ByteWriter {
public:
    void bytes(std::string_view raw);
    void u32(std::uint32_t v);
    void f32(float v);
    void f64(double v);
    /// u32 length prefix followed by the raw UTF-8 bytes.
    void str(std::string_view s);

    const std::vector<char>& buffer() const noexcept { return buf_; }

private:
    template <typename T>
    void put(T v);

    std::vector<char> buf_;
};

/// Bounds-checked little-endian cursor. Reads past the end throw ParseError
/// carrying the offset of the failed read.
class ByteReader {
public:
    explicit ByteReader(std::span<const char> data) : data_(data) {}

    std::string_view bytes(std::size_t n, const char* what);
    std::uint32_t u32(const char* what);
    float f32(const char* what);
    double f64(const char* what);
    std::string str(const char* what);

    std::size_t offset() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    template <typename T>
    T get(const char* what);

    std::span<const char> data_;
    std::size_t pos_ = 0;
};

std::vector<char> read_file_bytes(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const char> data);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace mtvg
