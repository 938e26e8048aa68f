#pragma once

#include "mtvg/ensemble.hpp"
#include "mtvg/evaluation.hpp"
#include "mtvg/feature_io.hpp"
#include "mtvg/run_config.hpp"
#include "mtvg/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mtvg {

// On-disk corpus layout under RunConfig::data_dir:
//   features/<video_id>.mgfb       one feature bundle per video
//   annotations/<video_id>.json    one annotation set per video
//   split.json                     {"train": [video ids], "test": [video ids]}
// A split name is "train", "test" or "all" (every video in features/, sorted).

struct Corpus {
    std::vector<FeatureBundle> bundles;
    std::vector<AnnotationSet> annotations;
};

/// Keeps the tracks named in `ids`, in that order; empty `ids` keeps all.
FeatureBundle select_features(const FeatureBundle& bundle, const std::vector<std::string>& ids);

std::vector<std::string> split_video_ids(const std::filesystem::path& data_dir, const std::string& split);
Corpus load_corpus(const RunConfig& cfg, const std::string& split);

/// One line of a predictions file.
struct PredictionRecord {
    std::string video_id;
    std::string query_id;
    Interval interval;
    double score = 0.0;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// One line of a candidate exchange file.
struct CandidateRecord {
    std::string video_id;
    std::string query_id;
    ScoredCandidate candidate;

    friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

std::string prediction_to_json(const PredictionRecord& r);
std::string candidate_to_json(const CandidateRecord& r);
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);
void write_candidates(const std::filesystem::path& path, const std::vector<CandidateRecord>& records);
/// Schema errors carry the 1-based line number as the ParseError offset.
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
std::vector<CandidateRecord> read_candidates(const std::filesystem::path& path);
IntervalMap predictions_to_map(const std::vector<PredictionRecord>& records);
IntervalMap ground_truth_map(const std::vector<AnnotationSet>& annotations);

/// Writes a deterministic synthetic corpus plus split.json into cfg.data_dir.
void cmd_gen_fixtures(const RunConfig& cfg);

/// Dumps every selected track of the split pooled to the clip grid. Tensor
/// names: "pooled/<video_id>/<extractor_id>" {n_clips, D} and "duration/<video_id>".
void cmd_pool(const RunConfig& cfg, const std::string& split, const std::filesystem::path& out);

struct TrainOutputs {
    std::filesystem::path checkpoint;
    std::optional<std::filesystem::path> log;
    /// Warm start: reuse this checkpoint, extending its fusion layer to the
    /// selected feature set when it differs.
    std::optional<std::filesystem::path> init_checkpoint;
};

TrainResult cmd_train(const RunConfig& cfg, const std::string& split, const TrainOutputs& out);

struct PredictOutputs {
    std::filesystem::path predictions;
    /// Combined maps: "map/<video_id>/<query_id>" {n, n} with NaN on invalid
    /// cells, "duration/<video_id>" {1} and "mask/stride" {1}.
    std::optional<std::filesystem::path> score_dump;
    /// Top ensemble.top_k candidates per query, tagged with cfg.model_id.
    std::optional<std::filesystem::path> candidates;
};

std::vector<PredictionRecord> cmd_predict(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                          const std::string& split, const PredictOutputs& out);

/// Inputs are either all score-map dumps (.mgpc: cellwise sum, then argmax)
/// or all candidate files (.jsonl: normalize, top-k, NMS across models).
std::vector<PredictionRecord> cmd_fuse(const RunConfig& cfg, const std::vector<std::filesystem::path>& inputs,
                                       const std::filesystem::path& predictions_out,
                                       const std::optional<std::filesystem::path>& dump_out = std::nullopt);

EvalReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& predictions, const std::string& split,
                    const std::optional<std::filesystem::path>& report_out = std::nullopt,
                    const std::string& name = {});

/// Renders saved report JSON files as one table; rows are named by the
/// report's "name" field, else the file stem.
std::string cmd_report(const std::vector<std::filesystem::path>& reports);

}  // namespace mtvg
