#include "mtvg/fusion.hpp"

#include "mtvg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mtvg {

namespace {

Eigen::MatrixXd uniform_init(int rows, int cols, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            m(r, c) = dist(rng);
        }
    }
    return m;
}

int find_slot(const TrackLayout& layout, const std::string& id) {
    for (std::size_t k = 0; k < layout.size(); ++k) {
        if (layout[k].extractor_id == id) {
            return static_cast<int>(k);
        }
    }
    return -1;
}

void check_subset(const TrackLayout& old_layout, const TrackLayout& new_layout) {
    for (const auto& slot : old_layout) {
        const int k = find_slot(new_layout, slot.extractor_id);
        if (k < 0) {
            throw InvalidArgument("warm start: track '" + slot.extractor_id + "' missing from the new layout");
        }
        if (new_layout[static_cast<std::size_t>(k)].dim != slot.dim) {
            throw ShapeError("warm start: track '" + slot.extractor_id + "' changed dimension");
        }
    }
}

std::vector<int> offsets_of(const TrackLayout& layout) {
    std::vector<int> off(layout.size() + 1, 0);
    for (std::size_t k = 0; k < layout.size(); ++k) {
        off[k + 1] = off[k] + layout[k].dim;
    }
    return off;
}

}  // namespace

TrackLayout layout_of(const FeatureBundle& bundle) {
    TrackLayout layout;
    for (const auto& t : bundle.tracks) {
        layout.push_back({t.extractor_id, t.dim()});
    }
    return layout;
}

int ConcatFusionParams::input_dim() const {
    int d = 0;
    for (const auto& s : layout) {
        d += s.dim;
    }
    return d;
}

FusionMode mode_of(const FusionParams& params) {
    return std::holds_alternative<ConcatFusionParams>(params) ? FusionMode::concat : FusionMode::weighted;
}

const TrackLayout& layout_of(const FusionParams& params) {
    return std::visit([](const auto& p) -> const TrackLayout& { return p.layout; }, params);
}

int fused_dim(const FusionParams& params) {
    return std::visit([](const auto& p) { return p.output_dim(); }, params);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    if (logits.size() == 0) {
        throw InvalidArgument("softmax of an empty vector");
    }
    const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

Eigen::MatrixXd normalize_rows(Eigen::MatrixXd m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double norm = m.row(r).norm();
        if (norm > 0.0) {
            m.row(r) /= norm;
        }
    }
    return m;
}

void check_layout(const FeatureBundle& bundle, const TrackLayout& layout) {
    if (bundle.tracks.size() != layout.size()) {
        throw ShapeError("bundle '" + bundle.video_id + "' has " + std::to_string(bundle.tracks.size()) +
                         " tracks, parameters expect " + std::to_string(layout.size()));
    }
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto& t = bundle.tracks[k];
        if (t.extractor_id != layout[k].extractor_id || t.dim() != layout[k].dim) {
            throw ShapeError("bundle '" + bundle.video_id + "' track " + std::to_string(k) + " is '" +
                             t.extractor_id + "' (dim " + std::to_string(t.dim()) + "), expected '" +
                             layout[k].extractor_id + "' (dim " + std::to_string(layout[k].dim) + ")");
        }
    }
}

Eigen::MatrixXd concat_fusion_input(const FeatureBundle& bundle, const ClipGrid& grid) {
    validate_bundle(bundle);
    const TrackLayout layout = layout_of(bundle);
    const auto off = offsets_of(layout);
    Eigen::MatrixXd cat(bundle.rows(), off.back());
    for (std::size_t k = 0; k < bundle.tracks.size(); ++k) {
        cat.middleCols(off[k], layout[k].dim) = bundle.tracks[k].data.cast<double>();
    }
    return pool_to_grid(normalize_rows(std::move(cat)), grid.n_clips());
}

std::vector<Eigen::MatrixXd> weighted_fusion_inputs(const FeatureBundle& bundle, const ClipGrid& grid) {
    validate_bundle(bundle);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(bundle.tracks.size());
    for (const auto& t : bundle.tracks) {
        out.push_back(pool_to_grid(normalize_rows(t.data.cast<double>()), grid.n_clips()));
    }
    return out;
}

Eigen::MatrixXd concat_fuse(const Eigen::MatrixXd& input, const ConcatFusionParams& params) {
    if (input.cols() != params.projection.cols()) {
        throw ShapeError("concat fusion input has " + std::to_string(input.cols()) + " columns, projection expects " +
                         std::to_string(params.projection.cols()));
    }
    return input * params.projection.transpose();
}

Eigen::MatrixXd concat_fuse(const FeatureBundle& bundle, const ClipGrid& grid, const ConcatFusionParams& params) {
    check_layout(bundle, params.layout);
    return concat_fuse(concat_fusion_input(bundle, grid), params);
}

Eigen::MatrixXd weighted_fuse(const std::vector<Eigen::MatrixXd>& inputs, const WeightedFusionParams& params) {
    const std::size_t K = params.projections.size();
    if (inputs.size() != K || static_cast<std::size_t>(params.logits.size()) != K || K == 0) {
        throw ShapeError("weighted fusion: track count mismatch");
    }
    const Eigen::VectorXd w = softmax(params.logits);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(inputs.front().rows(), params.output_dim());
    for (std::size_t k = 0; k < K; ++k) {
        if (inputs[k].cols() != params.projections[k].cols() || inputs[k].rows() != out.rows()) {
            throw ShapeError("weighted fusion: track " + std::to_string(k) + " dimension mismatch");
        }
        out.noalias() += w[static_cast<Eigen::Index>(k)] * (inputs[k] * params.projections[k].transpose());
    }
    return params.gamma * out;
}

Eigen::MatrixXd weighted_fuse(const FeatureBundle& bundle, const ClipGrid& grid, const WeightedFusionParams& params) {
    check_layout(bundle, params.layout);
    return weighted_fuse(weighted_fusion_inputs(bundle, grid), params);
}

WeightedFusionGrad weighted_fuse_grad(const std::vector<Eigen::MatrixXd>& inputs,
                                      const WeightedFusionParams& params, const Eigen::MatrixXd& upstream) {
    const std::size_t K = params.projections.size();
    if (inputs.size() != K || static_cast<std::size_t>(params.logits.size()) != K || K == 0) {
        throw ShapeError("weighted fusion grad: track count mismatch");
    }
    if (upstream.rows() != inputs.front().rows() || upstream.cols() != params.output_dim()) {
        throw ShapeError("weighted fusion grad: upstream shape mismatch");
    }
    const Eigen::VectorXd w = softmax(params.logits);
    WeightedFusionGrad g;
    Eigen::VectorXd dw(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const Eigen::MatrixXd z = inputs[k] * params.projections[k].transpose();
        const double inner = (upstream.array() * z.array()).sum();
        g.gamma += w[ki] * inner;
        dw[ki] = params.gamma * inner;
        g.projections.push_back(params.gamma * w[ki] * (upstream.transpose() * inputs[k]));
    }
    // Softmax Jacobian: d logit_k = w_k (dw_k - sum_j w_j dw_j).
    g.logits = (w.array() * (dw.array() - w.dot(dw))).matrix();
    return g;
}

Eigen::MatrixXd concat_fuse_grad(const Eigen::MatrixXd& input, const Eigen::MatrixXd& upstream) {
    if (input.rows() != upstream.rows()) {
        throw ShapeError("concat fusion grad: row mismatch");
    }
    return upstream.transpose() * input;
}

ConcatFusionParams init_concat_params(const TrackLayout& layout, int out_dim, std::uint64_t seed) {
    if (layout.empty() || out_dim < 1) {
        throw InvalidArgument("concat fusion needs tracks and a positive output dim");
    }
    std::mt19937_64 rng(seed);
    ConcatFusionParams p;
    p.layout = layout;
    p.projection = uniform_init(out_dim, p.input_dim(), rng);
    return p;
}

WeightedFusionParams init_weighted_params(const TrackLayout& layout, int out_dim, std::uint64_t seed) {
    if (layout.empty() || out_dim < 1) {
        throw InvalidArgument("weighted fusion needs tracks and a positive output dim");
    }
    std::mt19937_64 rng(seed);
    WeightedFusionParams p;
    p.layout = layout;
    for (const auto& slot : layout) {
        p.projections.push_back(uniform_init(out_dim, slot.dim, rng));
    }
    p.logits = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
    p.gamma = 1.0;
    return p;
}

FusionParams warm_start_params(const FusionParams& old, const TrackLayout& new_layout, std::uint64_t seed) {
    check_subset(layout_of(old), new_layout);
    std::mt19937_64 rng(seed);

    if (const auto* c = std::get_if<ConcatFusionParams>(&old)) {
        ConcatFusionParams p;
        p.layout = new_layout;
        const auto old_off = offsets_of(c->layout);
        const auto new_off = offsets_of(new_layout);
        p.projection = uniform_init(c->output_dim(), new_off.back(), rng);
        for (std::size_t k = 0; k < new_layout.size(); ++k) {
            const int o = find_slot(c->layout, new_layout[k].extractor_id);
            if (o >= 0) {
                p.projection.middleCols(new_off[k], new_layout[k].dim) =
                    c->projection.middleCols(old_off[static_cast<std::size_t>(o)], new_layout[k].dim);
            }
        }
        return p;
    }

    const auto& w = std::get<WeightedFusionParams>(old);
    WeightedFusionParams p;
    p.layout = new_layout;
    p.gamma = w.gamma;
    p.logits.resize(static_cast<Eigen::Index>(new_layout.size()));
    const double mean_logit = w.logits.mean();
    for (std::size_t k = 0; k < new_layout.size(); ++k) {
        const int o = find_slot(w.layout, new_layout[k].extractor_id);
        if (o >= 0) {
            p.projections.push_back(w.projections[static_cast<std::size_t>(o)]);
            p.logits[static_cast<Eigen::Index>(k)] = w.logits[o];
        } else {
            p.projections.push_back(uniform_init(w.output_dim(), new_layout[k].dim, rng));
            p.logits[static_cast<Eigen::Index>(k)] = mean_logit;
        }
    }
    return p;
}

}  // namespace mtvg
