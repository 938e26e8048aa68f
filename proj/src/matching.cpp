#include "mtvg/matching.hpp"

#include "mtvg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mtvg {

namespace {

constexpr double kConsScale = 0.5;
constexpr double kConsShift = 0.5;
constexpr double kConsExponent = 0.3;

Eigen::MatrixXd uniform_init(int rows, int cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            m(r, c) = dist(rng);
        }
    }
    return m;
}

void check_fused(const Eigen::MatrixXd& fused, const MatchModelParams& params) {
    if (fused.cols() != params.moment_projection.cols()) {
        throw ShapeError("fused grid has " + std::to_string(fused.cols()) + " columns, scorer expects " +
                         std::to_string(params.moment_projection.cols()));
    }
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

MatchModelParams init_match_params(int fused_dim, int query_dim, int embed_dim, std::uint64_t seed) {
    if (fused_dim < 1 || query_dim < 1 || embed_dim < 1) {
        throw InvalidArgument("scorer dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    MatchModelParams p;
    p.moment_projection = uniform_init(embed_dim, fused_dim, 1.0 / std::sqrt(double(fused_dim)), rng);
    p.query_projection = uniform_init(embed_dim, query_dim, 1.0 / std::sqrt(double(query_dim)), rng);
    // Zero head: S_iou starts at 0.5 everywhere.
    p.iou_head = Eigen::VectorXd::Zero(2 * embed_dim);
    p.iou_bias = 0.0;
    return p;
}

Eigen::VectorXd moment_embedding(const Eigen::MatrixXd& fused, int i, int j, const MatchModelParams& params) {
    check_fused(fused, params);
    if (i < 0 || i > j || j >= fused.rows()) {
        throw InvalidArgument("invalid candidate (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    const Eigen::VectorXd mean = fused.middleRows(i, j - i + 1).colwise().mean().transpose();
    Eigen::VectorXd e = params.moment_projection * mean;
    const double norm = e.norm();
    if (norm > 0.0) {
        e /= norm;
    }
    return e;
}

Eigen::VectorXd query_embedding(const Eigen::VectorXd& query, const MatchModelParams& params) {
    if (query.size() != params.query_projection.cols()) {
        throw ShapeError("query embedding has dim " + std::to_string(query.size()) + ", scorer expects " +
                         std::to_string(params.query_projection.cols()));
    }
    Eigen::VectorXd e = params.query_projection * query;
    const double norm = e.norm();
    if (norm > 0.0) {
        e /= norm;
    }
    return e;
}

MomentTable::MomentTable(const Eigen::MatrixXd& fused, const MatchModelParams& params, const CandidateMask& mask)
    : mask_(mask) {
    check_fused(fused, params);
    if (fused.rows() != mask.n_clips()) {
        throw ShapeError("fused grid has " + std::to_string(fused.rows()) + " rows, mask expects " +
                         std::to_string(mask.n_clips()));
    }
    projected_ = fused * params.moment_projection.transpose();
    const Eigen::Index n = projected_.rows();
    const Eigen::Index de = projected_.cols();
    Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(n + 1, de);
    for (Eigen::Index r = 0; r < n; ++r) {
        prefix.row(r + 1) = prefix.row(r) + projected_.row(r);
    }
    const auto& cells = mask.cells();
    embeddings_.resize(static_cast<Eigen::Index>(cells.size()), de);
    mean_norms_.resize(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const Cell c = cells[k];
        embeddings_.row(ki) = (prefix.row(c.j + 1) - prefix.row(c.i)) / double(c.j - c.i + 1);
        const double norm = embeddings_.row(ki).norm();
        mean_norms_[ki] = norm;
        if (norm > 0.0) {
            embeddings_.row(ki) /= norm;
        }
    }
}

ScoreMaps score_maps(const MomentTable& moments, const Eigen::VectorXd& query, const MatchModelParams& params) {
    const Eigen::VectorXd qe = query_embedding(query, params);
    const Eigen::Index de = params.embed_dim();
    if (params.iou_head.size() != 2 * de) {
        throw ShapeError("iou head must have 2 * embed_dim entries");
    }
    const Eigen::VectorXd cons = moments.embeddings() * qe;
    const Eigen::VectorXd moment_logit = moments.embeddings() * params.iou_head.head(de);
    const double query_logit = params.iou_head.tail(de).dot(qe) + params.iou_bias;

    ScoreMaps out{ScoreMap2D(moments.mask(), MapKind::cons), ScoreMap2D(moments.mask(), MapKind::iou)};
    const auto& cells = moments.mask().cells();
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        out.cons.set(cells[k].i, cells[k].j, std::clamp(cons[ki], -1.0, 1.0));
        out.iou.set(cells[k].i, cells[k].j, sigmoid(moment_logit[ki] + query_logit));
    }
    return out;
}

ScoreMaps score_maps(const Eigen::MatrixXd& fused, const Eigen::VectorXd& query, const MatchModelParams& params,
                     const CandidateMask& mask) {
    return score_maps(MomentTable(fused, params, mask), query, params);
}

ScoreMaps score_maps(const Eigen::MatrixXd& fused, const QueryAnnotation& query, const MatchModelParams& params,
                     const CandidateMask& mask) {
    return score_maps(fused, query.embedding, params, mask);
}

double combine_score(double cons, double iou) {
    const double base = std::max(0.0, cons * kConsScale + kConsShift);
    return std::pow(base, kConsExponent) * iou;
}

ScoreMap2D combine_scores(const ScoreMap2D& cons, const ScoreMap2D& iou) {
    if (!(cons.mask() == iou.mask())) {
        throw ShapeError("combine_scores: contrastive and IoU maps have different masks");
    }
    if (cons.kind() != MapKind::cons || iou.kind() != MapKind::iou) {
        throw InvalidArgument("combine_scores expects a contrastive map and an IoU map");
    }
    ScoreMap2D out(cons.mask(), MapKind::combined);
    for (const Cell& c : cons.mask().cells()) {
        out.set(c.i, c.j, combine_score(cons.at(c.i, c.j), iou.at(c.i, c.j)));
    }
    return out;
}

}  // namespace mtvg
