#pragma once

#include "mtvg/feature_io.hpp"
#include "mtvg/temporal.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace mtvg {

/// Linear moment/query scorer standing in for a 2D-map grounding network.
struct MatchModelParams {
    Eigen::MatrixXd moment_projection;  // d_e x d_f
    Eigen::MatrixXd query_projection;   // d_e x Dq
    Eigen::VectorXd iou_head;           // 2 d_e: moment half, then query half
    double iou_bias = 0.0;

    int embed_dim() const { return static_cast<int>(moment_projection.rows()); }
    int fused_dim() const { return static_cast<int>(moment_projection.cols()); }
    int query_dim() const { return static_cast<int>(query_projection.cols()); }
};

MatchModelParams init_match_params(int fused_dim, int query_dim, int embed_dim, std::uint64_t seed);

/// L2-normalized projection of the mean of fused rows i..j.
Eigen::VectorXd moment_embedding(const Eigen::MatrixXd& fused, int i, int j, const MatchModelParams& params);

/// L2-normalized projection of a query embedding.
Eigen::VectorXd query_embedding(const Eigen::VectorXd& query, const MatchModelParams& params);

/// Moment embeddings of every valid cell, computed from prefix sums of the
/// projected grid. Row k corresponds to mask.cells()[k].
class MomentTable {
public:
    MomentTable(const Eigen::MatrixXd& fused, const MatchModelParams& params, const CandidateMask& mask);

    const CandidateMask& mask() const noexcept { return mask_; }
    /// Unit-norm embeddings (zero rows where the span mean vanished).
    const Eigen::MatrixXd& embeddings() const noexcept { return embeddings_; }
    /// Norms of the projected span means before normalization.
    const Eigen::VectorXd& mean_norms() const noexcept { return mean_norms_; }
    /// Projected fused grid (n x d_e).
    const Eigen::MatrixXd& projected() const noexcept { return projected_; }

private:
    CandidateMask mask_;
    Eigen::MatrixXd projected_;
    Eigen::MatrixXd embeddings_;
    Eigen::VectorXd mean_norms_;
};

struct ScoreMaps {
    ScoreMap2D cons;
    ScoreMap2D iou;
};

/// S_cons = cosine(moment, query) and S_iou = sigmoid(head . [moment; query] + bias) on valid cells.
ScoreMaps score_maps(const Eigen::MatrixXd& fused, const Eigen::VectorXd& query, const MatchModelParams& params,
                     const CandidateMask& mask);
ScoreMaps score_maps(const Eigen::MatrixXd& fused, const QueryAnnotation& query, const MatchModelParams& params,
                     const CandidateMask& mask);
ScoreMaps score_maps(const MomentTable& moments, const Eigen::VectorXd& query, const MatchModelParams& params);

/// (0.5 * cons + 0.5)^0.3 * iou
double combine_score(double cons, double iou);
ScoreMap2D combine_scores(const ScoreMap2D& cons, const ScoreMap2D& iou);

double sigmoid(double z);

}  // namespace mtvg
