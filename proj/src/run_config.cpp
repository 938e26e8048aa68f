#include "mtvg/run_config.hpp"

#include "mtvg/binary_io.hpp"
#include "mtvg/errors.hpp"

#include <json.hpp>

#include <cstdlib>
#include <set>

namespace mtvg {

namespace {

using nlohmann::json;

// Copies j[key] into `out` when present; remembers the key as consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ParseError("config section '" + path_ + "' must be an object", 0);
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ParseError("config key '" + where(key) + "': " + e.what(), 0);
        }
    }

    const json* section(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void reject_unknown() const {
        for (const auto& [key, value] : j_.items()) {
            if (seen_.count(key) == 0) {
                throw ParseError("unknown config key '" + (path_.empty() ? key : path_ + "." + key) + "'", 0);
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_train(const json& j, TrainConfig& t) {
    Reader r(j, "train");
    r.get("epochs", t.epochs);
    r.get("learning_rate", t.learning_rate);
    r.get("iou_scale_min", t.iou_scale_min);
    r.get("iou_scale_max", t.iou_scale_max);
    r.get("temperature", t.temperature);
    r.get("augmentation", t.augmentation);
    r.get("min_cut_fraction", t.min_cut_fraction);
    r.get("cuts_per_video", t.cuts_per_video);
    r.get("bce_weight", t.bce_weight);
    r.get("nce_weight", t.nce_weight);
    r.get("candidate_stride", t.candidate_stride);
    r.get("fused_dim", t.fused_dim);
    r.get("weighted_dim", t.weighted_dim);
    r.get("embed_dim", t.embed_dim);
    r.reject_unknown();
}

void read_ensemble(const json& j, InterFuseConfig& e) {
    Reader r(j, "ensemble");
    std::string norm(to_string(e.normalization));
    r.get("normalization", norm);
    e.normalization = parse_normalization(norm);
    r.get("top_k", e.top_k_per_model);
    r.get("nms_iou", e.iou_threshold);
    r.reject_unknown();
}

void read_fixtures(const json& j, SyntheticSpec& s, double& held_out) {
    Reader r(j, "fixtures");
    r.get("n_videos", s.n_videos);
    r.get("n_tracks", s.n_tracks);
    r.get("dims", s.dims);
    r.get("queries_per_video", s.queries_per_video);
    r.get("signal_strength", s.signal_strength);
    r.get("query_dim", s.query_dim);
    r.get("noise_sigma", s.noise_sigma);
    r.get("min_duration_s", s.min_duration_s);
    r.get("max_duration_s", s.max_duration_s);
    r.get("min_moment_s", s.min_moment_s);
    r.get("max_moment_s", s.max_moment_s);
    r.get("track_gain", s.track_gain);
    r.get("split_query", s.split_query);
    r.get("shared_query_component", s.shared_query_component);
    r.get("drift", s.drift);
    r.get("held_out_fraction", held_out);
    r.reject_unknown();
}

}  // namespace

FusionMode parse_fusion_mode(std::string_view name) {
    if (name == "concat") {
        return FusionMode::concat;
    }
    if (name == "weighted") {
        return FusionMode::weighted;
    }
    throw InvalidArgument("unknown fusion mode '" + std::string(name) + "' (expected concat or weighted)");
}

std::string_view to_string(FusionMode mode) { return mode == FusionMode::concat ? "concat" : "weighted"; }

void RunConfig::validate() const {
    if (n_clips < 1) {
        throw InvalidArgument("n_clips must be >= 1");
    }
    std::set<std::string> ids;
    for (const auto& f : features) {
        if (f.empty() || !ids.insert(f).second) {
            throw InvalidArgument("feature ids must be non-empty and unique ('" + f + "')");
        }
    }
    if (model_id.empty()) {
        throw InvalidArgument("model_id must not be empty");
    }
    effective_train().validate();
    if (ensemble.top_k_per_model < 1) {
        throw InvalidArgument("ensemble.top_k must be >= 1");
    }
    if (!(ensemble.iou_threshold > 0.0 && ensemble.iou_threshold <= 1.0)) {
        throw InvalidArgument("ensemble.nms_iou must be in (0, 1]");
    }
    if (!(held_out_fraction >= 0.0 && held_out_fraction < 1.0)) {
        throw InvalidArgument("fixtures.held_out_fraction must be in [0, 1)");
    }
}

TrainConfig RunConfig::effective_train() const {
    TrainConfig t = train;
    t.seed = seed;
    t.n_clips = n_clips;
    return t;
}

RunConfig run_config_from_json(std::string_view text, const RunConfig& defaults) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config JSON: ") + e.what(), e.byte);
    }
    RunConfig cfg = defaults;
    Reader r(j, "");
    r.get("seed", cfg.seed);
    r.get("n_clips", cfg.n_clips);
    std::string mode(to_string(cfg.fusion_mode));
    r.get("fusion_mode", mode);
    cfg.fusion_mode = parse_fusion_mode(mode);
    r.get("features", cfg.features);
    std::string data_dir = cfg.data_dir.string();
    r.get("data_dir", data_dir);
    cfg.data_dir = data_dir;
    r.get("model_id", cfg.model_id);
    if (const json* t = r.section("train")) {
        read_train(*t, cfg.train);
    }
    if (const json* e = r.section("ensemble")) {
        read_ensemble(*e, cfg.ensemble);
    }
    if (const json* f = r.section("fixtures")) {
        read_fixtures(*f, cfg.fixtures, cfg.held_out_fraction);
    }
    r.reject_unknown();
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    const TrainConfig& t = cfg.train;
    const SyntheticSpec& s = cfg.fixtures;
    json j;
    j["seed"] = cfg.seed;
    j["n_clips"] = cfg.n_clips;
    j["fusion_mode"] = std::string(to_string(cfg.fusion_mode));
    j["features"] = cfg.features;
    j["data_dir"] = cfg.data_dir.string();
    j["model_id"] = cfg.model_id;
    j["train"] = {{"epochs", t.epochs},
                  {"learning_rate", t.learning_rate},
                  {"iou_scale_min", t.iou_scale_min},
                  {"iou_scale_max", t.iou_scale_max},
                  {"temperature", t.temperature},
                  {"augmentation", t.augmentation},
                  {"min_cut_fraction", t.min_cut_fraction},
                  {"cuts_per_video", t.cuts_per_video},
                  {"bce_weight", t.bce_weight},
                  {"nce_weight", t.nce_weight},
                  {"candidate_stride", t.candidate_stride},
                  {"fused_dim", t.fused_dim},
                  {"weighted_dim", t.weighted_dim},
                  {"embed_dim", t.embed_dim}};
    j["ensemble"] = {{"normalization", std::string(to_string(cfg.ensemble.normalization))},
                     {"top_k", cfg.ensemble.top_k_per_model},
                     {"nms_iou", cfg.ensemble.iou_threshold}};
    j["fixtures"] = {{"n_videos", s.n_videos},
                     {"n_tracks", s.n_tracks},
                     {"dims", s.dims},
                     {"queries_per_video", s.queries_per_video},
                     {"signal_strength", s.signal_strength},
                     {"query_dim", s.query_dim},
                     {"noise_sigma", s.noise_sigma},
                     {"min_duration_s", s.min_duration_s},
                     {"max_duration_s", s.max_duration_s},
                     {"min_moment_s", s.min_moment_s},
                     {"max_moment_s", s.max_moment_s},
                     {"track_gain", s.track_gain},
                     {"split_query", s.split_query},
                     {"shared_query_component", s.shared_query_component},
                     {"drift", s.drift},
                     {"held_out_fraction", cfg.held_out_fraction}};
    return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
    std::filesystem::path chosen;
    if (path) {
        chosen = *path;
    } else if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
        chosen = env;
    } else {
        return RunConfig{};
    }
    const auto bytes = read_file_bytes(chosen);
    try {
        return run_config_from_json(std::string_view(bytes.data(), bytes.size()));
    } catch (const ParseError& e) {
        throw ParseError(chosen.string() + ": " + e.what(), e.offset());
    }
}

}  // namespace mtvg
