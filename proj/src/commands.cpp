#include "mtvg/commands.hpp"

#include "mtvg/binary_io.hpp"
#include "mtvg/checkpoint.hpp"
#include "mtvg/errors.hpp"
#include "mtvg/synthetic.hpp"
#include "mtvg/tensor_archive.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace mtvg {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

fs::path features_dir(const fs::path& data_dir) { return data_dir / "features"; }
fs::path annotations_dir(const fs::path& data_dir) { return data_dir / "annotations"; }

void require_file(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) {
        throw Error(std::string(what) + " not found: " + p.string());
    }
}

void check_id(const std::string& id, const char* what) {
    if (id.empty() || id.find('/') != std::string::npos) {
        throw InvalidArgument(std::string(what) + " '" + id + "' must be non-empty and contain no '/'");
    }
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

// Calls fn(line_json, line_number) for each non-blank line.
template <typename Fn>
void for_each_json_line(const fs::path& path, Fn fn) {
    const auto bytes = read_file_bytes(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
            fn(j, line_no);
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": record " + std::to_string(line_no) + ": " + e.what(), line_no);
        } catch (const InvalidArgument& e) {
            throw ParseError(path.string() + ": record " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
}

Interval interval_from(const json& j) {
    const Interval iv{j.at("start_s").get<double>(), j.at("end_s").get<double>()};
    if (!is_valid(iv)) {
        throw InvalidArgument("interval must satisfy 0 <= start_s < end_s");
    }
    return iv;
}

TensorArchive dump_maps(const std::vector<std::string>& keys, const std::vector<ScoreMap2D>& maps,
                        const std::map<std::string, double>& durations, int stride) {
    TensorArchive a;
    a.put_scalar("mask/stride", stride);
    for (const auto& [vid, d] : durations) {
        a.put_scalar("duration/" + vid, d);
    }
    for (std::size_t k = 0; k < keys.size(); ++k) {
        a.put_matrix("map/" + keys[k], maps[k].values());
    }
    return a;
}

struct LoadedDump {
    int stride = 1;
    std::vector<std::string> keys;  // "<video_id>/<query_id>", in file order
    std::vector<ScoreMap2D> maps;
    std::map<std::string, double> durations;
};

LoadedDump load_dump(const fs::path& path) {
    const TensorArchive a = TensorArchive::load(path);
    LoadedDump d;
    d.stride = static_cast<int>(a.scalar("mask/stride"));
    std::map<int, CandidateMask> masks;
    for (const auto& t : a.tensors()) {
        if (t.name.rfind("duration/", 0) == 0) {
            d.durations[t.name.substr(9)] = t.data.at(0);
        } else if (t.name.rfind("map/", 0) == 0) {
            if (t.shape.size() != 2 || t.shape[0] != t.shape[1] || t.shape[0] == 0) {
                throw ShapeError(path.string() + ": score map '" + t.name + "' is not square");
            }
            const int n = static_cast<int>(t.shape[0]);
            auto it = masks.find(n);
            if (it == masks.end()) {
                it = masks.emplace(n, CandidateMask::dense(n, d.stride)).first;
            }
            ScoreMap2D map(it->second, MapKind::combined);
            for (const Cell c : it->second.cells()) {
                const double v = t.data[static_cast<std::size_t>(c.i) * n + c.j];
                if (!std::isfinite(v)) {
                    throw ParseError(path.string() + ": non-finite value on a valid cell of '" + t.name + "'", 0);
                }
                map.set(c.i, c.j, v);
            }
            d.keys.push_back(t.name.substr(4));
            d.maps.push_back(std::move(map));
        }
    }
    return d;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
    const auto slash = key.rfind('/');
    if (slash == std::string::npos) {
        throw ParseError("malformed score map key '" + key + "'", 0);
    }
    return {key.substr(0, slash), key.substr(slash + 1)};
}

bool has_extension(const fs::path& p, const char* ext) { return p.extension() == ext; }

}  // namespace

FeatureBundle select_features(const FeatureBundle& bundle, const std::vector<std::string>& ids) {
    if (ids.empty()) {
        return bundle;
    }
    FeatureBundle out;
    out.video_id = bundle.video_id;
    out.duration_s = bundle.duration_s;
    for (const auto& id : ids) {
        const auto it = std::find_if(bundle.tracks.begin(), bundle.tracks.end(),
                                     [&](const FeatureTrack& t) { return t.extractor_id == id; });
        if (it == bundle.tracks.end()) {
            throw InvalidArgument("bundle '" + bundle.video_id + "' has no track '" + id + "'");
        }
        out.tracks.push_back(*it);
    }
    return out;
}

std::vector<std::string> split_video_ids(const fs::path& data_dir, const std::string& split) {
    if (split == "all") {
        const fs::path dir = features_dir(data_dir);
        if (!fs::is_directory(dir)) {
            throw Error("feature directory not found: " + dir.string());
        }
        std::vector<std::string> ids;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".mgfb") {
                ids.push_back(entry.path().stem().string());
            }
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }
    if (split != "train" && split != "test") {
        throw InvalidArgument("unknown split '" + split + "' (expected train, test or all)");
    }
    const fs::path path = data_dir / "split.json";
    require_file(path, "split file");
    const auto bytes = read_file_bytes(path);
    try {
        const auto j = json::parse(bytes.begin(), bytes.end());
        return j.at(split).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

Corpus load_corpus(const RunConfig& cfg, const std::string& split) {
    Corpus c;
    for (const auto& vid : split_video_ids(cfg.data_dir, split)) {
        const fs::path fpath = features_dir(cfg.data_dir) / (vid + ".mgfb");
        const fs::path apath = annotations_dir(cfg.data_dir) / (vid + ".json");
        require_file(fpath, "feature bundle");
        require_file(apath, "annotation file");
        FeatureBundle b = select_features(load_bundle(fpath), cfg.features);
        AnnotationSet a = load_annotations(apath, cfg.fixtures.query_dim);
        if (b.video_id != vid || a.video_id != vid) {
            throw Error("files for '" + vid + "' carry a different video_id");
        }
        c.bundles.push_back(std::move(b));
        c.annotations.push_back(std::move(a));
    }
    if (c.bundles.empty()) {
        throw Error("split '" + split + "' of " + cfg.data_dir.string() + " is empty");
    }
    return c;
}

std::string prediction_to_json(const PredictionRecord& r) {
    ordered_json j;
    j["video_id"] = r.video_id;
    j["query_id"] = r.query_id;
    j["start_s"] = r.interval.start_s;
    j["end_s"] = r.interval.end_s;
    j["score"] = r.score;
    return j.dump();
}

std::string candidate_to_json(const CandidateRecord& r) {
    ordered_json j;
    j["video_id"] = r.video_id;
    j["query_id"] = r.query_id;
    j["model_id"] = r.candidate.model_id;
    j["start_s"] = r.candidate.interval.start_s;
    j["end_s"] = r.candidate.interval.end_s;
    j["score"] = r.candidate.score;
    return j.dump();
}

void write_predictions(const fs::path& path, const std::vector<PredictionRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) {
        lines.push_back(prediction_to_json(r));
    }
    write_text_atomic(path, join_lines(lines));
}

void write_candidates(const fs::path& path, const std::vector<CandidateRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) {
        lines.push_back(candidate_to_json(r));
    }
    write_text_atomic(path, join_lines(lines));
}

std::vector<PredictionRecord> read_predictions(const fs::path& path) {
    std::vector<PredictionRecord> out;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        PredictionRecord r;
        r.video_id = j.at("video_id").get<std::string>();
        r.query_id = j.at("query_id").get<std::string>();
        r.interval = interval_from(j);
        r.score = j.value("score", 0.0);
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<CandidateRecord> read_candidates(const fs::path& path) {
    std::vector<CandidateRecord> out;
    for_each_json_line(path, [&](const json& j, std::size_t) {
        CandidateRecord r;
        r.video_id = j.at("video_id").get<std::string>();
        r.query_id = j.at("query_id").get<std::string>();
        r.candidate.model_id = j.at("model_id").get<std::string>();
        r.candidate.interval = interval_from(j);
        r.candidate.score = j.at("score").get<double>();
        if (!std::isfinite(r.candidate.score)) {
            throw InvalidArgument("score must be finite");
        }
        out.push_back(std::move(r));
    });
    return out;
}

IntervalMap predictions_to_map(const std::vector<PredictionRecord>& records) {
    IntervalMap m;
    for (const auto& r : records) {
        const std::string key = r.video_id + "/" + r.query_id;
        if (!m.emplace(key, r.interval).second) {
            throw InvalidArgument("duplicate prediction for " + key);
        }
    }
    return m;
}

IntervalMap ground_truth_map(const std::vector<AnnotationSet>& annotations) {
    IntervalMap m;
    for (const auto& a : annotations) {
        for (const auto& q : a.queries) {
            m[a.video_id + "/" + q.query_id] = q.gt;
        }
    }
    return m;
}

void cmd_gen_fixtures(const RunConfig& cfg) {
    cfg.validate();
    const SyntheticDataset data = generate_synthetic_dataset(cfg.seed, cfg.fixtures);
    const auto n = data.bundles.size();
    const auto n_test = static_cast<std::size_t>(std::floor(cfg.held_out_fraction * double(n)));
    ordered_json split;
    split["train"] = json::array();
    split["test"] = json::array();
    for (std::size_t v = 0; v < n; ++v) {
        const auto& vid = data.bundles[v].video_id;
        save_bundle(data.bundles[v], features_dir(cfg.data_dir) / (vid + ".mgfb"));
        save_annotations(data.annotations[v], annotations_dir(cfg.data_dir) / (vid + ".json"));
        split[v < n - n_test ? "train" : "test"].push_back(vid);
    }
    write_text_atomic(cfg.data_dir / "split.json", split.dump(1) + "\n");
}

void cmd_pool(const RunConfig& cfg, const std::string& split, const fs::path& out) {
    cfg.validate();
    const Corpus c = load_corpus(cfg, split);
    TensorArchive a;
    for (const auto& b : c.bundles) {
        validate_bundle(b);
        const ClipGrid grid(b.duration_s, cfg.n_clips);
        a.put_scalar("duration/" + b.video_id, b.duration_s);
        for (const auto& t : b.tracks) {
            a.put_matrix("pooled/" + b.video_id + "/" + t.extractor_id, pool_to_grid(t, grid));
        }
    }
    a.save(out);
}

TrainResult cmd_train(const RunConfig& cfg, const std::string& split, const TrainOutputs& out) {
    cfg.validate();
    if (out.init_checkpoint) {
        require_file(*out.init_checkpoint, "initial checkpoint");
    }
    const TrainConfig tc = cfg.effective_train();
    const Corpus c = load_corpus(cfg, split);

    std::optional<GroundingModel> init;
    if (out.init_checkpoint) {
        GroundingModel m = load_model(*out.init_checkpoint);
        if (mode_of(m.fusion) != cfg.fusion_mode) {
            throw InvalidArgument("initial checkpoint uses a different fusion mode");
        }
        const TrackLayout layout = layout_of(c.bundles.front());
        if (layout_of(m.fusion) != layout) {
            m.fusion = warm_start_params(m.fusion, layout, tc.seed);
        }
        init = std::move(m);
    }

    std::vector<TrainingExample> data;
    for (std::size_t v = 0; v < c.bundles.size(); ++v) {
        data.push_back({&c.bundles[v], &c.annotations[v]});
    }
    TrainResult result = train(data, cfg.fusion_mode, tc, init);
    save_model(result.model, out.checkpoint);
    if (out.log) {
        std::vector<std::string> lines;
        for (const auto& e : result.log) {
            lines.push_back(epoch_log_json(e));
        }
        write_text_atomic(*out.log, join_lines(lines));
    }
    return result;
}

std::vector<PredictionRecord> cmd_predict(const RunConfig& cfg, const fs::path& checkpoint, const std::string& split,
                                          const PredictOutputs& out) {
    cfg.validate();
    require_file(checkpoint, "checkpoint");
    const GroundingModel model = load_model(checkpoint);
    const Corpus c = load_corpus(cfg, split);
    const CandidateMask mask = CandidateMask::dense(cfg.n_clips, cfg.train.candidate_stride);

    std::vector<PredictionRecord> preds;
    std::vector<CandidateRecord> cands;
    std::vector<std::string> keys;
    std::vector<ScoreMap2D> maps;
    std::map<std::string, double> durations;
    for (std::size_t v = 0; v < c.bundles.size(); ++v) {
        const auto& b = c.bundles[v];
        const auto& a = c.annotations[v];
        check_layout(b, layout_of(model.fusion));
        const ClipGrid grid(b.duration_s, cfg.n_clips);
        std::vector<ScoreMap2D> video_maps = predict(b, a, model, grid, mask);
        durations[b.video_id] = b.duration_s;
        for (std::size_t q = 0; q < video_maps.size(); ++q) {
            const auto& qid = a.queries[q].query_id;
            const Cell best = best_candidate(video_maps[q]);
            preds.push_back({b.video_id, qid, grid.candidate_interval(best.i, best.j), video_maps[q].at(best.i, best.j)});
            if (out.candidates) {
                for (auto& sc : extract_candidates(video_maps[q], grid, cfg.ensemble.top_k_per_model, cfg.model_id)) {
                    cands.push_back({b.video_id, qid, std::move(sc)});
                }
            }
            if (out.score_dump) {
                check_id(b.video_id, "video_id");
                check_id(qid, "query_id");
                keys.push_back(b.video_id + "/" + qid);
                maps.push_back(std::move(video_maps[q]));
            }
        }
    }
    write_predictions(out.predictions, preds);
    if (out.candidates) {
        write_candidates(*out.candidates, cands);
    }
    if (out.score_dump) {
        dump_maps(keys, maps, durations, cfg.train.candidate_stride).save(*out.score_dump);
    }
    return preds;
}

std::vector<PredictionRecord> cmd_fuse(const RunConfig& cfg, const std::vector<fs::path>& inputs,
                                       const fs::path& predictions_out, const std::optional<fs::path>& dump_out) {
    cfg.validate();
    if (inputs.empty()) {
        throw InvalidArgument("fuse needs at least one input");
    }
    for (const auto& p : inputs) {
        require_file(p, "fuse input");
    }
    const bool dumps = std::all_of(inputs.begin(), inputs.end(), [](const fs::path& p) { return has_extension(p, ".mgpc"); });
    const bool lists = std::all_of(inputs.begin(), inputs.end(), [](const fs::path& p) { return has_extension(p, ".jsonl"); });
    if (!dumps && !lists) {
        throw InvalidArgument("fuse inputs must be all score-map dumps (.mgpc) or all candidate files (.jsonl)");
    }
    if (dump_out && !dumps) {
        throw InvalidArgument("a fused score-map dump needs score-map inputs");
    }

    std::vector<PredictionRecord> preds;
    if (dumps) {
        std::vector<LoadedDump> loaded;
        for (const auto& p : inputs) {
            loaded.push_back(load_dump(p));
        }
        const LoadedDump& first = loaded.front();
        for (std::size_t m = 1; m < loaded.size(); ++m) {
            if (loaded[m].keys != first.keys || loaded[m].durations != first.durations || loaded[m].stride != first.stride) {
                throw InvalidArgument("score-map dump " + inputs[m].string() + " does not cover the same queries and grid as " +
                                      inputs.front().string());
            }
        }
        std::vector<ScoreMap2D> fused_maps;
        for (std::size_t k = 0; k < first.keys.size(); ++k) {
            std::vector<ScoreMap2D> per_model;
            for (const auto& d : loaded) {
                per_model.push_back(d.maps[k]);
            }
            ScoreMap2D fused = intra_fuse(per_model);
            const auto [vid, qid] = split_key(first.keys[k]);
            const auto dur = first.durations.find(vid);
            if (dur == first.durations.end()) {
                throw ParseError("score-map dump lacks the duration of '" + vid + "'", 0);
            }
            const ClipGrid grid(dur->second, fused.n_clips());
            const Cell best = best_candidate(fused);
            preds.push_back({vid, qid, grid.candidate_interval(best.i, best.j), fused.at(best.i, best.j)});
            fused_maps.push_back(std::move(fused));
        }
        if (dump_out) {
            dump_maps(first.keys, fused_maps, first.durations, first.stride).save(*dump_out);
        }
    } else {
        // (video, query) in first-seen order -> model id -> candidates
        std::vector<std::pair<std::string, std::string>> order;
        std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<ScoredCandidate>>> grouped;
        for (const auto& p : inputs) {
            for (auto& r : read_candidates(p)) {
                auto key = std::make_pair(r.video_id, r.query_id);
                auto [it, inserted] = grouped.try_emplace(key);
                if (inserted) {
                    order.push_back(key);
                }
                it->second[r.candidate.model_id].push_back(std::move(r.candidate));
            }
        }
        for (const auto& key : order) {
            std::vector<std::vector<ScoredCandidate>> per_model;
            for (auto& [model, list] : grouped[key]) {
                per_model.push_back(std::move(list));
            }
            const auto kept = inter_fuse(std::move(per_model), cfg.ensemble);
            if (kept.empty()) {
                continue;
            }
            preds.push_back({key.first, key.second, kept.front().interval, kept.front().score});
        }
    }
    write_predictions(predictions_out, preds);
    return preds;
}

EvalReport cmd_eval(const RunConfig& cfg, const fs::path& predictions, const std::string& split,
                    const std::optional<fs::path>& report_out, const std::string& name) {
    cfg.validate();
    require_file(predictions, "predictions file");
    const auto records = read_predictions(predictions);
    std::vector<AnnotationSet> anns;
    for (const auto& vid : split_video_ids(cfg.data_dir, split)) {
        anns.push_back(load_annotations(annotations_dir(cfg.data_dir) / (vid + ".json"), cfg.fixtures.query_dim));
    }
    const EvalReport report = evaluate(predictions_to_map(records), ground_truth_map(anns));
    if (report_out) {
        write_text_atomic(*report_out, report_to_json(report, name.empty() ? cfg.model_id : name));
    }
    return report;
}

std::string cmd_report(const std::vector<fs::path>& reports) {
    if (reports.empty()) {
        throw InvalidArgument("report needs at least one report file");
    }
    std::vector<NamedReport> rows;
    for (const auto& p : reports) {
        require_file(p, "report file");
        const auto bytes = read_file_bytes(p);
        NamedReport row;
        try {
            row.report = report_from_json(std::string(bytes.begin(), bytes.end()), &row.name);
        } catch (const ParseError& e) {
            throw ParseError(p.string() + ": " + e.what(), e.offset());
        }
        if (row.name.empty()) {
            row.name = p.stem().string();
        }
        rows.push_back(std::move(row));
    }
    return render_report_table(rows);
}

}  // namespace mtvg
