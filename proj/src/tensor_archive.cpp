#include "mtvg/tensor_archive.hpp"

#include "mtvg/binary_io.hpp"
#include "mtvg/errors.hpp"

#include <algorithm>

namespace mtvg {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

std::size_t element_count(const std::vector<std::uint32_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

}  // namespace

void TensorArchive::put(NamedTensor t) {
    if (element_count(t.shape) != t.data.size()) {
        throw ShapeError("tensor '" + t.name + "' shape does not match payload size");
    }
    auto it = std::find_if(tensors_.begin(), tensors_.end(),
                           [&](const NamedTensor& x) { return x.name == t.name; });
    if (it != tensors_.end()) {
        *it = std::move(t);
    } else {
        tensors_.push_back(std::move(t));
    }
}

void TensorArchive::put_scalar(const std::string& name, double v) { put({name, {1}, {v}}); }

void TensorArchive::put_vector(const std::string& name, const Eigen::VectorXd& v) {
    put({name, {static_cast<std::uint32_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())});
}

void TensorArchive::put_matrix(const std::string& name, const Eigen::MatrixXd& m) {
    NamedTensor t{name, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
    t.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            t.data.push_back(m(r, c));
        }
    }
    put(std::move(t));
}

bool TensorArchive::contains(const std::string& name) const {
    return std::any_of(tensors_.begin(), tensors_.end(), [&](const NamedTensor& t) { return t.name == name; });
}

const NamedTensor& TensorArchive::get(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) {
            return t;
        }
    }
    throw Error("tensor '" + name + "' not found in archive");
}

double TensorArchive::scalar(const std::string& name) const {
    const auto& t = get(name);
    if (t.data.size() != 1) {
        throw ShapeError("tensor '" + name + "' is not a scalar");
    }
    return t.data[0];
}

Eigen::VectorXd TensorArchive::vector(const std::string& name) const {
    const auto& t = get(name);
    if (t.shape.size() != 1) {
        throw ShapeError("tensor '" + name + "' is not rank 1");
    }
    return Eigen::Map<const Eigen::VectorXd>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

Eigen::MatrixXd TensorArchive::matrix(const std::string& name) const {
    const auto& t = get(name);
    if (t.shape.size() != 2) {
        throw ShapeError("tensor '" + name + "' is not rank 2");
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(t.data.data(), t.shape[0], t.shape[1]);
}

std::vector<char> TensorArchive::encode() const {
    ByteWriter w;
    w.bytes(std::string_view(kMagic, 4));
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& t : tensors_) {
        w.str(t.name);
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) {
            w.u32(d);
        }
        for (double v : t.data) {
            w.f64(v);
        }
    }
    return w.buffer();
}

TensorArchive TensorArchive::decode(std::span<const char> bytes) {
    ByteReader r(bytes);
    const auto magic = r.bytes(4, "magic");
    if (magic != std::string_view(kMagic, 4)) {
        throw ParseError("bad magic, expected MGPC", 0);
    }
    const std::size_t version_at = r.offset();
    if (r.u32("version") != kVersion) {
        throw ParseError("unsupported MGPC version", version_at);
    }
    const std::uint32_t count = r.u32("tensor count");
    TensorArchive out;
    for (std::uint32_t k = 0; k < count; ++k) {
        NamedTensor t;
        t.name = r.str("tensor name");
        const std::uint32_t rank = r.u32("tensor rank");
        if (rank > 8) {
            throw ParseError("implausible tensor rank", r.offset() - 4);
        }
        for (std::uint32_t d = 0; d < rank; ++d) {
            t.shape.push_back(r.u32("tensor dim"));
        }
        const std::size_t n = element_count(t.shape);
        const std::size_t at = r.offset();
        if (n > (bytes.size() - at) / sizeof(double)) {
            throw ParseError("truncated payload for tensor '" + t.name + "'", at);
        }
        t.data.resize(n);
        for (auto& v : t.data) {
            v = r.f64("tensor payload");
        }
        out.put(std::move(t));
    }
    return out;
}

void TensorArchive::save(const std::filesystem::path& path) const {
    const auto bytes = encode();
    write_file_atomic(path, bytes);
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode(bytes);
}

}  // namespace mtvg
