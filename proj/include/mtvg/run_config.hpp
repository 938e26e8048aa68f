#pragma once

#include "mtvg/ensemble.hpp"
#include "mtvg/fusion.hpp"
#include "mtvg/synthetic.hpp"
#include "mtvg/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtvg {

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnvVar = "MTVG_CONFIG";

FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(FusionMode mode);

/// Settings shared by every subcommand. Serialized as one JSON document:
///
///   { "seed", "n_clips", "fusion_mode", "features": [ids...], "data_dir", "model_id",
///     "train": {...TrainConfig...}, "ensemble": {"normalization", "top_k", "nms_iou"},
///     "fixtures": {...SyntheticSpec..., "held_out_fraction"} }
///
/// Missing keys keep their defaults; unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 0;
    int n_clips = 128;
    FusionMode fusion_mode = FusionMode::concat;
    /// Ordered extractor ids to use; empty means every track in file order.
    std::vector<std::string> features;
    std::filesystem::path data_dir = "data";
    std::string model_id = "model";

    TrainConfig train;
    InterFuseConfig ensemble;

    SyntheticSpec fixtures;
    /// Trailing fraction of generated videos listed under "test" in split.json.
    double held_out_fraction = 0.2;

    /// Throws InvalidArgument describing the first bad field.
    void validate() const;

    /// TrainConfig with the top-level seed and n_clips applied.
    TrainConfig effective_train() const;
};

RunConfig run_config_from_json(std::string_view json, const RunConfig& defaults = {});
std::string run_config_to_json(const RunConfig& cfg);

/// Reads `path` when given, else the file named by $MTVG_CONFIG when set, else defaults.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

}  // namespace mtvg
