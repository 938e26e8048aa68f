#pragma once

#include "mtvg/feature_io.hpp"
#include "mtvg/temporal.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

inline Eigen::VectorXd gaussian_vec(std::mt19937_64& rng, Eigen::Index n) { return gaussian(rng, n, 1).col(0); }

inline mtvg::Interval random_interval(std::mt19937_64& rng, double horizon = 100.0) {
    double a = uniform(rng, 0.0, horizon);
    double b = uniform(rng, 0.0, horizon);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-6) b = a + 1.0;
    return mtvg::Interval{a, b};
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("mtvg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline mtvg::FeatureTrack random_track(std::mt19937_64& rng, const std::string& id, int rows, int dim) {
    mtvg::FeatureTrack t;
    t.extractor_id = id;
    t.data = gaussian(rng, rows, dim).cast<float>();
    return t;
}

}  // namespace testing
