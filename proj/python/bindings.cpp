#include "mtvg/commands.hpp"
#include "mtvg/ensemble.hpp"
#include "mtvg/errors.hpp"
#include "mtvg/evaluation.hpp"
#include "mtvg/feature_io.hpp"
#include "mtvg/matching.hpp"
#include "mtvg/run_config.hpp"
#include "mtvg/temporal.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace py = pybind11;
using namespace mtvg;

namespace {

using Candidate = std::tuple<double, double, double, std::string>;

// Maps cross the boundary as n x n arrays with NaN outside the dense upper triangle.
ScoreMap2D to_map(const Eigen::MatrixXd& values, MapKind kind, int stride) {
    if (values.rows() != values.cols()) {
        throw ShapeError("score map must be square");
    }
    ScoreMap2D m(CandidateMask::dense(static_cast<int>(values.rows()), stride), kind);
    for (const Cell& c : m.mask().cells()) {
        m.set(c.i, c.j, values(c.i, c.j));
    }
    return m;
}

IntervalMap to_intervals(const std::map<std::string, std::pair<double, double>>& in) {
    IntervalMap out;
    for (const auto& [key, se] : in) {
        out[key] = Interval::make(se.first, se.second);
    }
    return out;
}

py::dict report_dict(const EvalReport& r) {
    py::dict d;
    py::dict r1;
    for (const auto& [thr, v] : r.r1_at) r1[py::float_(thr)] = v;
    d["r1"] = r1;
    d["avg"] = r.avg;
    d["n_queries"] = r.n_queries;
    return d;
}

RunConfig config_from(const std::optional<std::string>& json) {
    RunConfig cfg = json ? run_config_from_json(*json) : RunConfig{};
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-track temporal video grounding: geometry, fusion, scoring, ensembling and the batch pipeline.";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<NumericError>(m, "NumericError", error.ptr());

    py::class_<Interval>(m, "Interval")
        .def(py::init(&Interval::make), py::arg("start_s"), py::arg("end_s"))
        .def_readonly("start_s", &Interval::start_s)
        .def_readonly("end_s", &Interval::end_s)
        .def_property_readonly("length", &Interval::length)
        .def("__eq__", [](const Interval& a, const Interval& b) { return a == b; })
        .def("__repr__", [](const Interval& iv) {
            return "Interval(" + py::repr(py::float_(iv.start_s)).cast<std::string>() + ", " +
                   py::repr(py::float_(iv.end_s)).cast<std::string>() + ")";
        });

    m.def("temporal_iou", &temporal_iou, py::arg("a"), py::arg("b"));

    py::class_<ClipGrid>(m, "ClipGrid")
        .def(py::init<double, int>(), py::arg("duration_s"), py::arg("n_clips") = 128)
        .def_property_readonly("duration_s", &ClipGrid::duration_s)
        .def_property_readonly("n_clips", &ClipGrid::n_clips)
        .def_property_readonly("clip_len", &ClipGrid::clip_len)
        .def("clip_interval", &ClipGrid::clip_interval, py::arg("p"))
        .def("candidate_interval", &ClipGrid::candidate_interval, py::arg("i"), py::arg("j"));

    m.def("combine_score", &combine_score, py::arg("cons"), py::arg("iou"));
    m.def(
        "combine_scores",
        [](const Eigen::MatrixXd& cons, const Eigen::MatrixXd& iou, int stride) {
            return combine_scores(to_map(cons, MapKind::cons, stride), to_map(iou, MapKind::iou, stride)).values();
        },
        py::arg("cons"), py::arg("iou"), py::arg("stride") = 1,
        "Elementwise combination of two n x n maps on the valid cells; NaN elsewhere.");
    m.def(
        "intra_fuse",
        [](const std::vector<Eigen::MatrixXd>& maps, int stride) {
            std::vector<ScoreMap2D> in;
            for (const auto& v : maps) in.push_back(to_map(v, MapKind::combined, stride));
            return intra_fuse(in).values();
        },
        py::arg("maps"), py::arg("stride") = 1);
    m.def(
        "best_candidate",
        [](const Eigen::MatrixXd& map, int stride) {
            const Cell c = best_candidate(to_map(map, MapKind::aggregate, stride));
            return std::pair{c.i, c.j};
        },
        py::arg("map"), py::arg("stride") = 1);

    m.def(
        "temporal_nms",
        [](const std::vector<Candidate>& cands, double iou_threshold) {
            std::vector<ScoredCandidate> in;
            for (const auto& [s, e, score, model] : cands) in.push_back({Interval::make(s, e), score, model});
            std::vector<Candidate> out;
            for (const auto& c : temporal_nms(std::move(in), iou_threshold)) {
                out.emplace_back(c.interval.start_s, c.interval.end_s, c.score, c.model_id);
            }
            return out;
        },
        py::arg("candidates"), py::arg("iou_threshold") = 0.5,
        "Candidates are (start_s, end_s, score, model_id) tuples; returns the kept ones in priority order.");

    m.def(
        "pool_to_grid", [](const Eigen::MatrixXd& rows, int n_clips) { return pool_to_grid(rows, n_clips); },
        py::arg("rows"), py::arg("n_clips"));

    m.def(
        "load_bundle",
        [](const std::filesystem::path& path) {
            const FeatureBundle b = load_bundle(path);
            py::dict tracks;
            for (const auto& t : b.tracks) tracks[py::str(t.extractor_id)] = Eigen::MatrixXf(t.data);
            return py::make_tuple(b.video_id, b.duration_s, tracks);
        },
        py::arg("path"), "Returns (video_id, duration_s, {extractor_id: float32 T x D array}) in file track order.");
    m.def(
        "save_bundle",
        [](const std::filesystem::path& path, const std::string& video_id, double duration_s,
           const std::vector<std::pair<std::string, Eigen::MatrixXf>>& tracks) {
            FeatureBundle b;
            b.video_id = video_id;
            b.duration_s = duration_s;
            for (const auto& [id, data] : tracks) b.tracks.push_back({id, data});
            save_bundle(b, path);
        },
        py::arg("path"), py::arg("video_id"), py::arg("duration_s"), py::arg("tracks"));

    m.def(
        "evaluate",
        [](const std::map<std::string, std::pair<double, double>>& preds,
           const std::map<std::string, std::pair<double, double>>& gts) {
            return report_dict(evaluate(to_intervals(preds), to_intervals(gts)));
        },
        py::arg("predictions"), py::arg("ground_truth"),
        "Both map a query key to (start_s, end_s). Returns {'r1': {0.3, 0.5, 0.7}, 'avg', 'n_queries'}.");

    m.def("default_config", [] { return run_config_to_json(RunConfig{}); });
    m.def(
        "gen_fixtures", [](const std::optional<std::string>& config) { cmd_gen_fixtures(config_from(config)); },
        py::arg("config") = py::none());
    m.def(
        "train",
        [](const std::optional<std::string>& config, const std::string& split, const std::filesystem::path& checkpoint,
           const std::optional<std::filesystem::path>& log, const std::optional<std::filesystem::path>& init) {
            const TrainResult r = cmd_train(config_from(config), split, {checkpoint, log, init});
            std::vector<double> losses;
            for (const auto& e : r.log) losses.push_back(e.loss);
            return losses;
        },
        py::arg("config") = py::none(), py::arg("split") = "train", py::arg("checkpoint"),
        py::arg("log") = py::none(), py::arg("init_checkpoint") = py::none(), "Returns the per-epoch loss.");
    m.def(
        "predict",
        [](const std::optional<std::string>& config, const std::filesystem::path& checkpoint, const std::string& split,
           const std::filesystem::path& out, const std::optional<std::filesystem::path>& dump,
           const std::optional<std::filesystem::path>& candidates) {
            return cmd_predict(config_from(config), checkpoint, split, {out, dump, candidates}).size();
        },
        py::arg("config") = py::none(), py::arg("checkpoint"), py::arg("split") = "test", py::arg("out"),
        py::arg("dump") = py::none(), py::arg("candidates") = py::none(), "Returns the number of predictions.");
    m.def(
        "fuse",
        [](const std::optional<std::string>& config, const std::vector<std::filesystem::path>& inputs,
           const std::filesystem::path& out, const std::optional<std::filesystem::path>& dump) {
            return cmd_fuse(config_from(config), inputs, out, dump).size();
        },
        py::arg("config") = py::none(), py::arg("inputs"), py::arg("out"), py::arg("dump") = py::none());
    m.def(
        "eval",
        [](const std::optional<std::string>& config, const std::filesystem::path& predictions,
           const std::string& split) { return report_dict(cmd_eval(config_from(config), predictions, split)); },
        py::arg("config") = py::none(), py::arg("predictions"), py::arg("split") = "test");
}
