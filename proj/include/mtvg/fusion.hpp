#pragma once

#include "mtvg/feature_io.hpp"
#include "mtvg/temporal.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mtvg {

/// One entry of the ordered feature layout a set of fusion parameters expects.
struct TrackSlot {
    std::string extractor_id;
    int dim = 0;
    friend bool operator==(const TrackSlot&, const TrackSlot&) = default;
};

using TrackLayout = std::vector<TrackSlot>;

TrackLayout layout_of(const FeatureBundle& bundle);

/// Concatenation path: a single linear map over the concatenated, row-normalized,
/// grid-pooled features.
struct ConcatFusionParams {
    TrackLayout layout;
    Eigen::MatrixXd projection;  // d_out x sum(D_k)

    int input_dim() const;
    int output_dim() const { return static_cast<int>(projection.rows()); }
};

/// Weighted path: per-track projections mixed by softmax(logits) and scaled by gamma.
struct WeightedFusionParams {
    TrackLayout layout;
    std::vector<Eigen::MatrixXd> projections;  // d_c x D_k each
    Eigen::VectorXd logits;
    double gamma = 1.0;

    int output_dim() const { return projections.empty() ? 0 : static_cast<int>(projections.front().rows()); }
};

using FusionParams = std::variant<ConcatFusionParams, WeightedFusionParams>;

enum class FusionMode { concat, weighted };

FusionMode mode_of(const FusionParams& params);
const TrackLayout& layout_of(const FusionParams& params);
int fused_dim(const FusionParams& params);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Row-wise L2 normalization; zero rows are left untouched.
Eigen::MatrixXd normalize_rows(Eigen::MatrixXd m);

/// Concat -> Norm -> Avg: the parameter-free prefix of the concat path (n x sum(D_k)).
Eigen::MatrixXd concat_fusion_input(const FeatureBundle& bundle, const ClipGrid& grid);

/// Avg(Norm(v_k)) for every track (n x D_k each).
std::vector<Eigen::MatrixXd> weighted_fusion_inputs(const FeatureBundle& bundle, const ClipGrid& grid);

Eigen::MatrixXd concat_fuse(const FeatureBundle& bundle, const ClipGrid& grid, const ConcatFusionParams& params);
Eigen::MatrixXd concat_fuse(const Eigen::MatrixXd& input, const ConcatFusionParams& params);

Eigen::MatrixXd weighted_fuse(const FeatureBundle& bundle, const ClipGrid& grid, const WeightedFusionParams& params);
Eigen::MatrixXd weighted_fuse(const std::vector<Eigen::MatrixXd>& inputs, const WeightedFusionParams& params);

struct WeightedFusionGrad {
    std::vector<Eigen::MatrixXd> projections;
    Eigen::VectorXd logits;
    double gamma = 0.0;
};

/// Gradients of <upstream, weighted_fuse(inputs, params)> with respect to every parameter.
WeightedFusionGrad weighted_fuse_grad(const std::vector<Eigen::MatrixXd>& inputs,
                                      const WeightedFusionParams& params, const Eigen::MatrixXd& upstream);

/// Gradient of <upstream, concat_fuse(input, params)> with respect to the projection.
Eigen::MatrixXd concat_fuse_grad(const Eigen::MatrixXd& input, const Eigen::MatrixXd& upstream);

/// Fresh parameters: projections ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), equal logits, gamma = 1.
ConcatFusionParams init_concat_params(const TrackLayout& layout, int out_dim, std::uint64_t seed);
WeightedFusionParams init_weighted_params(const TrackLayout& layout, int out_dim, std::uint64_t seed);

/// Extends trained parameters to a larger feature layout. Tracks present in
/// `old` keep their projection (and logit); new tracks get fresh projections
/// and the mean of the old logits. Throws unless the old tracks are a subset.
FusionParams warm_start_params(const FusionParams& old, const TrackLayout& new_layout, std::uint64_t seed);

/// Throws ShapeError if the bundle does not match the expected layout.
void check_layout(const FeatureBundle& bundle, const TrackLayout& layout);

}  // namespace mtvg
