#pragma once

#include "mtvg/feature_io.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace mtvg {

/// Knobs for the planted-signal fixture corpus.
struct SyntheticSpec {
    int n_videos = 10;
    int n_tracks = 3;
    /// Per-track feature dimension; a single entry is broadcast to all tracks.
    std::vector<int> dims{32};
    int queries_per_video = 8;
    /// Amplitude of the planted pattern in units of the per-dimension noise sigma.
    double signal_strength = 5.0;
    int query_dim = 32;
    double noise_sigma = 1.0;
    int min_duration_s = 96;
    int max_duration_s = 160;
    double min_moment_s = 8.0;
    double max_moment_s = 24.0;
    /// Per-track multiplier on signal_strength; empty means 1 for every track.
    std::vector<double> track_gain;
    /// When set, track k only sees the k-th contiguous block of the query embedding.
    bool split_query = false;
    /// Fraction of the query embedding energy in a direction shared by all queries.
    double shared_query_component = 0.0;
    /// Relative weight of a second pattern that ramps from -1 to +1 across each moment,
    /// so that a moment's rows evolve while their mean stays on the base pattern.
    double drift = 2.0;
};

struct SyntheticDataset {
    std::vector<FeatureBundle> bundles;
    std::vector<AnnotationSet> annotations;
    /// Ground-truth linear maps (D_k x query_dim) that turn a query into its planted pattern.
    std::vector<Eigen::MatrixXd> track_maps;
    /// Second set of maps for the ramped component (see SyntheticSpec::drift).
    std::vector<Eigen::MatrixXd> drift_maps;
};

/// Deterministic in (seed, spec). Queries of a video have disjoint GT moments;
/// row t carries query q's pattern when its centre t + 0.5 lies inside q's GT.
SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, const SyntheticSpec& spec);

/// Planted pattern for one query on track k at ramp position `phase` in [-1, 1]
/// (zero when signal_strength is 0). phase = 0 gives the moment-average pattern.
Eigen::VectorXd planted_pattern(const SyntheticDataset& data, const SyntheticSpec& spec, int track,
                                const Eigen::VectorXd& query_embedding, double phase = 0.0);

}  // namespace mtvg
