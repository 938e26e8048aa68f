// mtvg: batch command line for fixtures, training, prediction, fusion and evaluation.

#include "mtvg/binary_io.hpp"
#include "mtvg/commands.hpp"
#include "mtvg/errors.hpp"
#include "mtvg/run_config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using mtvg::RunConfig;

// Values given on the command line; unset ones leave the config untouched.
struct Overrides {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_clips;
    std::optional<std::string> fusion_mode;
    std::optional<std::string> normalization;
    std::optional<double> nms_iou;
    std::optional<int> top_k;
    std::optional<std::string> data_dir;
    std::optional<std::string> model_id;
    std::vector<std::string> features;

    std::optional<int> epochs;
    std::optional<double> learning_rate;
    std::optional<bool> augmentation;
    std::optional<double> min_cut_fraction;
    std::optional<double> bce_weight;
    std::optional<double> nce_weight;
    std::optional<int> fused_dim;
    std::optional<int> embed_dim;

    std::optional<int> n_videos;
    std::optional<double> signal_strength;
};

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = mtvg::load_run_config(o.config ? std::optional<std::filesystem::path>(*o.config) : std::nullopt);
    if (o.seed) cfg.seed = *o.seed;
    if (o.n_clips) cfg.n_clips = *o.n_clips;
    if (o.fusion_mode) cfg.fusion_mode = mtvg::parse_fusion_mode(*o.fusion_mode);
    if (o.normalization) cfg.ensemble.normalization = mtvg::parse_normalization(*o.normalization);
    if (o.nms_iou) cfg.ensemble.iou_threshold = *o.nms_iou;
    if (o.top_k) cfg.ensemble.top_k_per_model = *o.top_k;
    if (o.data_dir) cfg.data_dir = *o.data_dir;
    if (o.model_id) cfg.model_id = *o.model_id;
    if (!o.features.empty()) cfg.features = o.features;
    if (o.epochs) cfg.train.epochs = *o.epochs;
    if (o.learning_rate) cfg.train.learning_rate = *o.learning_rate;
    if (o.augmentation) cfg.train.augmentation = *o.augmentation;
    if (o.min_cut_fraction) cfg.train.min_cut_fraction = *o.min_cut_fraction;
    if (o.bce_weight) cfg.train.bce_weight = *o.bce_weight;
    if (o.nce_weight) cfg.train.nce_weight = *o.nce_weight;
    if (o.fused_dim) cfg.train.fused_dim = *o.fused_dim;
    if (o.embed_dim) cfg.train.embed_dim = *o.embed_dim;
    if (o.n_videos) cfg.fixtures.n_videos = *o.n_videos;
    if (o.signal_strength) cfg.fixtures.signal_strength = *o.signal_strength;
    cfg.validate();
    return cfg;
}

void print_report(const mtvg::EvalReport& r, const std::string& name) {
    std::cout << mtvg::render_report_table({{name, r}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-track temporal video grounding toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, std::string("JSON run config (default: $") + mtvg::kConfigEnvVar + ")");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--n-clips", o.n_clips, "Clips per video grid");
    app.add_option("--fusion-mode", o.fusion_mode, "concat or weighted");
    app.add_option("--normalization", o.normalization, "Inter-model score normalization: minmax, zscore or none");
    app.add_option("--nms-iou", o.nms_iou, "Temporal NMS IoU threshold");
    app.add_option("--top-k", o.top_k, "Candidates kept per model and query");
    app.add_option("--data-dir", o.data_dir, "Corpus directory");
    app.add_option("--model-id", o.model_id, "Model id written to candidate files");
    app.add_option("--features", o.features, "Ordered extractor ids to use")->delimiter(',');

    auto* gen = app.add_subcommand("gen-fixtures", "Write a synthetic corpus to the data directory");
    gen->add_option("--n-videos", o.n_videos, "Number of videos");
    gen->add_option("--signal-strength", o.signal_strength, "Planted pattern amplitude in noise sigmas");

    std::string split = "";
    std::string out;
    auto* pool = app.add_subcommand("pool", "Dump features pooled to the clip grid");
    pool->add_option("--split", split, "train, test or all")->default_str("all");
    pool->add_option("--out", out, "Output .mgpc file")->required();

    mtvg::TrainOutputs train_out;
    std::string checkpoint;
    std::string log_path;
    std::string init_checkpoint;
    auto* train = app.add_subcommand("train", "Train a grounding model");
    train->add_option("--split", split, "Training split")->default_str("train");
    train->add_option("--checkpoint", checkpoint, "Output checkpoint (.mgpc)")->required();
    train->add_option("--log", log_path, "Training log (JSON lines)");
    train->add_option("--init-checkpoint", init_checkpoint, "Warm start from this checkpoint");
    train->add_option("--epochs", o.epochs, "Training epochs");
    train->add_option("--learning-rate", o.learning_rate, "Gradient descent step size");
    train->add_option("--augmentation", o.augmentation, "Multi-scale cut augmentation (true/false)");
    train->add_option("--min-cut-fraction", o.min_cut_fraction, "Minimum cut length as a fraction of the video");
    train->add_option("--bce-weight", o.bce_weight, "Weight of the IoU-map BCE term");
    train->add_option("--nce-weight", o.nce_weight, "Weight of the contrastive term");
    train->add_option("--fused-dim", o.fused_dim, "Output width of the fusion projection");
    train->add_option("--embed-dim", o.embed_dim, "Scorer embedding width");

    std::string dump;
    std::string candidates;
    auto* predict = app.add_subcommand("predict", "Predict one moment per query");
    predict->add_option("--split", split, "Split to predict")->default_str("test");
    predict->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    predict->add_option("--out", out, "Predictions (JSON lines)")->required();
    predict->add_option("--dump", dump, "Score-map dump (.mgpc)");
    predict->add_option("--candidates", candidates, "Top-k candidate file (JSON lines)");

    std::vector<std::string> inputs;
    auto* fuse = app.add_subcommand("fuse", "Ensemble score-map dumps or candidate files");
    fuse->add_option("inputs", inputs, "All .mgpc dumps or all .jsonl candidate files")->required();
    fuse->add_option("--out", out, "Predictions (JSON lines)")->required();
    fuse->add_option("--dump", dump, "Fused score-map dump (.mgpc inputs only)");

    std::string predictions;
    std::string report_out;
    std::string name;
    auto* eval = app.add_subcommand("eval", "Recall@1 at IoU 0.3/0.5/0.7");
    eval->add_option("--predictions", predictions, "Predictions (JSON lines)")->required();
    eval->add_option("--split", split, "Split holding the ground truth")->default_str("test");
    eval->add_option("--report-out", report_out, "Report JSON");
    eval->add_option("--name", name, "Row name in the report");

    std::vector<std::string> reports;
    auto* report = app.add_subcommand("report", "Tabulate saved report files");
    report->add_option("reports", reports, "Report JSON files")->required();
    report->add_option("--out", out, "Also write the table here");

    CLI11_PARSE(app, argc, argv);

    auto split_or = [&](const char* dflt) { return split.empty() ? std::string(dflt) : split; };
    try {
        if (report->parsed()) {
            std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
            const std::string table = mtvg::cmd_report(paths);
            std::cout << table;
            if (!out.empty()) {
                mtvg::write_text_atomic(out, table);
            }
            return 0;
        }
        const RunConfig cfg = resolve(o);
        if (gen->parsed()) {
            mtvg::cmd_gen_fixtures(cfg);
            std::cout << "wrote " << cfg.fixtures.n_videos << " videos to " << cfg.data_dir.string() << "\n";
        } else if (pool->parsed()) {
            mtvg::cmd_pool(cfg, split_or("all"), out);
        } else if (train->parsed()) {
            train_out.checkpoint = checkpoint;
            if (!log_path.empty()) train_out.log = log_path;
            if (!init_checkpoint.empty()) train_out.init_checkpoint = init_checkpoint;
            const auto result = mtvg::cmd_train(cfg, split_or("train"), train_out);
            if (!result.log.empty()) {
                const auto& first = result.log.front();
                const auto& last = result.log.back();
                std::printf("epochs %zu  loss %.6f -> %.6f\n", result.log.size(), first.loss, last.loss);
            }
        } else if (predict->parsed()) {
            mtvg::PredictOutputs po;
            po.predictions = out;
            if (!dump.empty()) po.score_dump = dump;
            if (!candidates.empty()) po.candidates = candidates;
            const auto preds = mtvg::cmd_predict(cfg, checkpoint, split_or("test"), po);
            std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
        } else if (fuse->parsed()) {
            std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
            std::optional<std::filesystem::path> dump_out;
            if (!dump.empty()) dump_out = dump;
            const auto preds = mtvg::cmd_fuse(cfg, paths, out, dump_out);
            std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
        } else if (eval->parsed()) {
            std::optional<std::filesystem::path> rp;
            if (!report_out.empty()) rp = report_out;
            const auto r = mtvg::cmd_eval(cfg, predictions, split_or("test"), rp, name);
            print_report(r, name.empty() ? cfg.model_id : name);
        }
    } catch (const mtvg::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mtvg::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
