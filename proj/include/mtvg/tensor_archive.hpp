#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mtvg {

struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<double> data;  // row-major
};

/// Ordered collection of named f64 tensors, serialized as the "MGPC" container:
///
///   magic "MGPC" | version u32 = 1 | tensor count u32 |
///   per tensor: name (u32 len + UTF-8) | rank u32 | dims u32... | f64 payload
///
/// Used for model checkpoints, pooled feature dumps and score-map dumps.
class TensorArchive {
public:
    void put(NamedTensor t);
    void put_scalar(const std::string& name, double v);
    void put_vector(const std::string& name, const Eigen::VectorXd& v);
    void put_matrix(const std::string& name, const Eigen::MatrixXd& m);

    bool contains(const std::string& name) const;
    const NamedTensor& get(const std::string& name) const;
    double scalar(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;
    Eigen::MatrixXd matrix(const std::string& name) const;

    const std::vector<NamedTensor>& tensors() const noexcept { return tensors_; }

    std::vector<char> encode() const;
    static TensorArchive decode(std::span<const char> bytes);

    void save(const std::filesystem::path& path) const;
    static TensorArchive load(const std::filesystem::path& path);

private:
    std::vector<NamedTensor> tensors_;
};

}  // namespace mtvg
