#include "mtvg/ensemble.hpp"

#include "mtvg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtvg {

Normalization parse_normalization(std::string_view name) {
    if (name == "minmax") {
        return Normalization::minmax;
    }
    if (name == "zscore") {
        return Normalization::zscore;
    }
    if (name == "none") {
        return Normalization::none;
    }
    throw InvalidArgument("unknown normalization '" + std::string(name) + "' (minmax, zscore, none)");
}

std::string_view to_string(Normalization n) {
    switch (n) {
        case Normalization::minmax: return "minmax";
        case Normalization::zscore: return "zscore";
        case Normalization::none: return "none";
    }
    return "none";
}

ScoreMap2D intra_fuse(std::span<const ScoreMap2D> maps) {
    if (maps.empty()) {
        throw InvalidArgument("intra_fuse needs at least one map");
    }
    const CandidateMask& mask = maps.front().mask();
    for (const auto& m : maps) {
        if (!(m.mask() == mask)) {
            throw ShapeError("intra_fuse: maps have different candidate masks");
        }
    }
    ScoreMap2D out(mask, MapKind::aggregate);
    for (const Cell& c : mask.cells()) {
        double s = 0.0;
        for (const auto& m : maps) {
            s += m.at(c.i, c.j);
        }
        out.set(c.i, c.j, s);
    }
    return out;
}

std::vector<ScoredCandidate> extract_candidates(const ScoreMap2D& map, const ClipGrid& grid, int top_k,
                                                const std::string& model_id) {
    if (top_k < 1) {
        throw InvalidArgument("top_k must be >= 1");
    }
    if (map.n_clips() != grid.n_clips()) {
        throw ShapeError("score map and grid disagree on n_clips");
    }
    std::vector<Cell> cells = map.mask().cells();
    if (cells.empty()) {
        throw InvalidArgument("score map has no valid candidates");
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(top_k), cells.size());
    // cells are lexicographic, so a stable descending sort keeps the argmax tie rule.
    std::stable_sort(cells.begin(), cells.end(),
                     [&](const Cell& a, const Cell& b) { return map.at(a.i, a.j) > map.at(b.i, b.j); });
    std::vector<ScoredCandidate> out;
    out.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
        out.push_back({grid.candidate_interval(cells[r].i, cells[r].j), map.at(cells[r].i, cells[r].j), model_id});
    }
    return out;
}

std::vector<std::vector<ScoredCandidate>> normalize_scores(std::vector<std::vector<ScoredCandidate>> per_model,
                                                           Normalization method) {
    for (auto& list : per_model) {
        if (method == Normalization::none) {
            continue;
        }
        if (list.empty()) {
            throw InvalidArgument("cannot normalize an empty candidate list");
        }
        if (method == Normalization::minmax) {
            const auto [lo, hi] = std::minmax_element(list.begin(), list.end(), [](const auto& a, const auto& b) {
                return a.score < b.score;
            });
            const double mn = lo->score;
            const double range = hi->score - mn;
            for (auto& c : list) {
                c.score = range > 0.0 ? (c.score - mn) / range : 0.5;
            }
        } else {
            const double n = static_cast<double>(list.size());
            double mean = 0.0;
            for (const auto& c : list) {
                mean += c.score;
            }
            mean /= n;
            double var = 0.0;
            for (const auto& c : list) {
                var += (c.score - mean) * (c.score - mean);
            }
            const double sd = std::sqrt(var / n);
            for (auto& c : list) {
                c.score = sd > 0.0 ? (c.score - mean) / sd : 0.0;
            }
        }
    }
    return per_model;
}

bool nms_precedes(const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.interval.start_s != b.interval.start_s) {
        return a.interval.start_s < b.interval.start_s;
    }
    if (a.interval.length() != b.interval.length()) {
        return a.interval.length() < b.interval.length();
    }
    return a.model_id < b.model_id;
}

std::vector<ScoredCandidate> temporal_nms(std::vector<ScoredCandidate> candidates, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw InvalidArgument("NMS IoU threshold must be in (0, 1]");
    }
    std::stable_sort(candidates.begin(), candidates.end(), nms_precedes);
    std::vector<ScoredCandidate> kept;
    for (auto& c : candidates) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const ScoredCandidate& k) {
            return temporal_iou(k.interval, c.interval) > iou_threshold;
        });
        if (!suppressed) {
            kept.push_back(std::move(c));
        }
    }
    return kept;
}

std::vector<ScoredCandidate> inter_fuse(std::vector<std::vector<ScoredCandidate>> per_model,
                                        const InterFuseConfig& cfg) {
    if (per_model.empty()) {
        throw InvalidArgument("inter_fuse needs at least one model");
    }
    if (cfg.top_k_per_model < 1) {
        throw InvalidArgument("top_k_per_model must be >= 1");
    }
    auto normalized = normalize_scores(std::move(per_model), cfg.normalization);
    std::vector<ScoredCandidate> pool;
    for (auto& list : normalized) {
        std::stable_sort(list.begin(), list.end(), nms_precedes);
        const std::size_t k = std::min<std::size_t>(list.size(), static_cast<std::size_t>(cfg.top_k_per_model));
        pool.insert(pool.end(), std::make_move_iterator(list.begin()),
                    std::make_move_iterator(list.begin() + static_cast<std::ptrdiff_t>(k)));
    }
    return temporal_nms(std::move(pool), cfg.iou_threshold);
}

}  // namespace mtvg
