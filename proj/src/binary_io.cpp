#include "mtvg/binary_io.hpp"

#include "mtvg/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mtvg {

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

template <typename T>
void ByteWriter::put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
}

void ByteWriter::bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }
void ByteWriter::u32(std::uint32_t v) { put(v); }
void ByteWriter::f32(float v) { put(v); }
void ByteWriter::f64(double v) { put(v); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
}

std::string_view ByteReader::bytes(std::size_t n, const char* what) {
    if (n > data_.size() - pos_) {
        throw ParseError(std::string("truncated input while reading ") + what, pos_);
    }
    std::string_view out(data_.data() + pos_, n);
    pos_ += n;
    return out;
}

template <typename T>
T ByteReader::get(const char* what) {
    const std::string_view raw = bytes(sizeof(T), what);
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
}

std::uint32_t ByteReader::u32(const char* what) { return get<std::uint32_t>(what); }
float ByteReader::f32(const char* what) { return get<float>(what); }
double ByteReader::f64(const char* what) { return get<double>(what); }

std::string ByteReader::str(const char* what) {
    const std::uint32_t n = u32(what);
    return std::string(bytes(n, what));
}

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const char> data) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) {
            throw Error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
    write_file_atomic(path, std::span<const char>(text.data(), text.size()));
}

}  // namespace mtvg
