#pragma once

#include "mtvg/feature_io.hpp"
#include "mtvg/fusion.hpp"
#include "mtvg/matching.hpp"
#include "mtvg/temporal.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mtvg {

/// Fusion parameters plus scorer parameters; also used as the gradient container.
struct GroundingModel {
    FusionParams fusion;
    MatchModelParams match;
};

GroundingModel init_model(FusionMode mode, const TrackLayout& layout, int fused_dim, int query_dim, int embed_dim,
                          std::uint64_t seed);

struct TrainConfig {
    int epochs = 40;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
    double iou_scale_min = 0.3;
    double iou_scale_max = 0.7;
    double temperature = 0.1;
    bool augmentation = false;
    /// Lower bound on cut length as a fraction of the video; the effective
    /// minimum is max(this * duration, 8 clips of the full-video grid).
    double min_cut_fraction = 0.0;
    int cuts_per_video = 1;
    double bce_weight = 1.0;
    double nce_weight = 1.0;

    int n_clips = 128;
    int candidate_stride = 1;
    /// d_out of the concat projection f.
    int fused_dim = 1024;
    /// d_c of the per-track projections in weighted fusion.
    int weighted_dim = 512;
    int embed_dim = 64;

    int fusion_dim(FusionMode mode) const { return mode == FusionMode::concat ? fused_dim : weighted_dim; }

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
};

/// Everything the loss needs for one video, precomputed.
struct VideoBatch {
    std::variant<Eigen::MatrixXd, std::vector<Eigen::MatrixXd>> fusion_input;
    double duration_s = 0.0;
    std::vector<Eigen::VectorXd> queries;
    Eigen::MatrixXd targets;       // Q x cells, scaled IoU in [0, 1]
    std::vector<int> best_cells;   // per query, index into mask.cells()
};

VideoBatch make_batch(const FeatureBundle& bundle, const AnnotationSet& ann, FusionMode mode,
                      const CandidateMask& mask, const TrainConfig& cfg);

struct LossTerms {
    double total = 0.0;
    double bce = 0.0;
    double nce = 0.0;
};

/// BCE(S_iou, scaled IoU) + InfoNCE over (query, best-candidate moment) pairs
/// of one video. When `grad` is non-null it receives d loss / d params.
LossTerms video_loss(const VideoBatch& batch, const GroundingModel& model, const CandidateMask& mask,
                     const TrainConfig& cfg, GroundingModel* grad = nullptr);

struct TrainingExample {
    const FeatureBundle* bundle = nullptr;
    const AnnotationSet* annotations = nullptr;
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double bce = 0.0;
    double nce = 0.0;
    int steps = 0;
    int cuts_sampled = 0;
    int cut_fallbacks = 0;
    double wall_ms = 0.0;
};

struct TrainResult {
    GroundingModel model;
    std::vector<EpochLog> log;
};

/// Plain per-video gradient descent. Deterministic in (data, config); an
/// optional `init` model (e.g. from warm_start_params) replaces fresh init.
TrainResult train(const std::vector<TrainingExample>& data, FusionMode mode, const TrainConfig& cfg,
                  const std::optional<GroundingModel>& init = std::nullopt);

/// Per-query fused grid -> maps for the whole pipeline.
Eigen::MatrixXd fuse_bundle(const FeatureBundle& bundle, const ClipGrid& grid, const FusionParams& fusion);

/// pool -> fuse -> score_maps -> combine_scores for every query of the video.
std::vector<ScoreMap2D> predict(const FeatureBundle& bundle, const AnnotationSet& ann, const GroundingModel& model,
                                const ClipGrid& grid, const CandidateMask& mask);

std::string epoch_log_json(const EpochLog& e);

}  // namespace mtvg
