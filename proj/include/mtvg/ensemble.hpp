#pragma once

#include "mtvg/temporal.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtvg {

struct ScoredCandidate {
    Interval interval;
    double score = 0.0;
    std::string model_id;

    friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

enum class Normalization { minmax, zscore, none };

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization n);

/// Cellwise sum of maps sharing one candidate mask.
ScoreMap2D intra_fuse(std::span<const ScoreMap2D> maps);

/// Top `top_k` valid cells by score (ties: smaller i, then smaller j) as
/// intervals on `grid`, best first.
std::vector<ScoredCandidate> extract_candidates(const ScoreMap2D& map, const ClipGrid& grid, int top_k,
                                                const std::string& model_id = {});

/// Brings each model's list to a common magnitude. minmax maps a constant list
/// to 0.5; zscore maps a zero-variance list to 0.
std::vector<std::vector<ScoredCandidate>> normalize_scores(std::vector<std::vector<ScoredCandidate>> per_model,
                                                           Normalization method);

/// NMS priority: higher score, then earlier start, then shorter interval, then model_id.
bool nms_precedes(const ScoredCandidate& a, const ScoredCandidate& b);

/// Greedy temporal NMS; drops candidates with IoU > threshold against a kept one.
std::vector<ScoredCandidate> temporal_nms(std::vector<ScoredCandidate> candidates, double iou_threshold = 0.5);

struct InterFuseConfig {
    Normalization normalization = Normalization::minmax;
    int top_k_per_model = 10;
    double iou_threshold = 0.5;
};

/// normalize per model -> keep each model's top_k -> pool -> temporal NMS.
std::vector<ScoredCandidate> inter_fuse(std::vector<std::vector<ScoredCandidate>> per_model,
                                        const InterFuseConfig& cfg = {});

}  // namespace mtvg
