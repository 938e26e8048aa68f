#pragma once

#include "support.hpp"

#include "mtvg/augmentation.hpp"
#include "mtvg/ensemble.hpp"
#include "mtvg/synthetic.hpp"
#include "mtvg/temporal.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace testing {

using mtvg::AnnotationSet;
using mtvg::Cell;
using mtvg::CandidateMask;
using mtvg::CutSpec;
using mtvg::Interval;
using mtvg::MapKind;
using mtvg::ScoredCandidate;
using mtvg::ScoreMap2D;
using boost::multiprecision::cpp_rational;

// Doubles are dyadic rationals, so this evaluates |a ∩ b| / |a ∪ b| without rounding
// until the final conversion.
inline double rational_iou(const Interval& a, const Interval& b) {
    const cpp_rational as(a.start_s), ae(a.end_s), bs(b.start_s), be(b.end_s);
    const cpp_rational inter = std::min(ae, be) - std::max(as, bs);
    if (inter <= 0) {
        return 0.0;
    }
    const cpp_rational uni = (ae - as) + (be - bs) - inter;
    return static_cast<double>(inter / uni);
}

// (0.5 c + 0.5)^0.3 * iou in 50 significant digits.
inline double combine_oracle(double cons, double iou) {
    using big = boost::multiprecision::cpp_dec_float_50;
    const big base = big(cons) * big("0.5") + big("0.5");
    const big exponent = big(3) / big(10);
    return static_cast<double>(pow(base, exponent) * big(iou));
}

inline ScoreMap2D random_map(std::mt19937_64& rng, const CandidateMask& mask, int levels = 0) {
    ScoreMap2D m(mask, MapKind::combined);
    for (const Cell& c : mask.cells()) {
        m.set(c.i, c.j, levels > 0 ? uniform_int(rng, 0, levels) / double(levels) : uniform(rng, 0, 1));
    }
    return m;
}

// Exhaustive argmax of the cellwise sum; the first maximum in row-major order wins.
inline Cell sum_argmax(std::span<const ScoreMap2D> maps) {
    const int n = maps.front().n_clips();
    double best = -1e300;
    Cell want{};
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0;
            for (const auto& mp : maps) s += mp.values()(i, j);
            if (s > best) {
                best = s;
                want = {i, j};
            }
        }
    }
    return want;
}

// Candidates on a coarse lattice with coarse scores, so that duplicates and
// priority ties are common.
inline std::vector<ScoredCandidate> random_candidates(std::mt19937_64& rng, int n) {
    std::vector<ScoredCandidate> out;
    const char* models[] = {"a", "b", "c"};
    for (int k = 0; k < n; ++k) {
        const int s = uniform_int(rng, 0, 40);
        const int len = uniform_int(rng, 1, 12);
        const double score = uniform_int(rng, 0, 20) / 20.0;
        out.push_back({{double(s), double(s + len)}, score, models[uniform_int(rng, 0, 2)]});
    }
    return out;
}

// Reference NMS: repeatedly take the best remaining candidate by an explicit
// priority key and discard everything overlapping it above the threshold.
inline std::vector<ScoredCandidate> reference_nms(std::vector<ScoredCandidate> rest, double thr) {
    auto key = [](const ScoredCandidate& c) {
        return std::make_tuple(-c.score, c.interval.start_s, c.interval.end_s - c.interval.start_s, c.model_id);
    };
    auto iou = [](const Interval& a, const Interval& b) {
        const double lo = std::max(a.start_s, b.start_s), hi = std::min(a.end_s, b.end_s);
        if (hi <= lo) return 0.0;
        return (hi - lo) / (std::max(a.end_s, b.end_s) - std::min(a.start_s, b.start_s));
    };
    std::vector<ScoredCandidate> kept;
    while (!rest.empty()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < rest.size(); ++k) {
            if (key(rest[k]) < key(rest[best])) best = k;
        }
        const ScoredCandidate top = rest[best];
        kept.push_back(top);
        std::vector<ScoredCandidate> next;
        for (std::size_t k = 0; k < rest.size(); ++k) {
            if (k != best && !(iou(top.interval, rest[k].interval) > thr)) next.push_back(rest[k]);
        }
        rest = std::move(next);
    }
    return kept;
}

// Random moments, with some snapped to the video ends or to each other so that
// touching and overlapping blocks show up.
inline AnnotationSet random_annotations(std::mt19937_64& rng) {
    AnnotationSet ann;
    ann.video_id = "v";
    ann.duration_s = uniform(rng, 30, 300);
    const int nq = uniform_int(rng, 1, 8);
    for (int q = 0; q < nq; ++q) {
        Interval gt = random_interval(rng, ann.duration_s);
        const int snap = uniform_int(rng, 0, 5);
        if (snap == 0) gt.start_s = 0.0;
        if (snap == 1) gt.end_s = ann.duration_s;
        if (snap == 2 && q > 0) {
            const double touch = ann.queries.back().gt.end_s;
            if (touch < ann.duration_s - 1.0) gt = {touch, uniform(rng, touch + 0.5, ann.duration_s)};
        }
        ann.queries.push_back({"q" + std::to_string(q), "", Eigen::Vector2d(1, 0), gt});
    }
    return ann;
}

// Independent statement of the cut contract. Returns a description of the
// first violation, or an empty string.
inline std::string cut_violation(const AnnotationSet& ann, const CutSpec& cut) {
    if (!(cut.cut.start_s >= 0.0 && cut.cut.end_s <= ann.duration_s && cut.cut.start_s < cut.cut.end_s)) {
        return "cut outside the video";
    }
    if (cut.retained_query_ids.empty()) return "nothing retained";
    std::set<std::string> retained(cut.retained_query_ids.begin(), cut.retained_query_ids.end());
    for (const auto& q : ann.queries) {
        const bool cuts_start = q.gt.start_s < cut.cut.start_s && cut.cut.start_s < q.gt.end_s;
        const bool cuts_end = q.gt.start_s < cut.cut.end_s && cut.cut.end_s < q.gt.end_s;
        if (cuts_start || cuts_end) return "cut point inside " + q.query_id;
        const bool inside = cut.cut.start_s <= q.gt.start_s && q.gt.end_s <= cut.cut.end_s;
        if (inside != (retained.count(q.query_id) == 1)) return "retained set differs for " + q.query_id;
    }
    // Retained ids are listed in start order.
    double prev = -1.0;
    for (const auto& id : cut.retained_query_ids) {
        for (const auto& q : ann.queries) {
            if (q.query_id == id) {
                if (q.gt.start_s < prev) return "retained ids out of order";
                prev = q.gt.start_s;
            }
        }
    }
    return {};
}

// Non-learned localizer that knows the planted templates: correlate every
// second with the query's base pattern on each track, subtract half the
// expected amplitude and take the maximum-sum run of seconds.
// `tracks` restricts the filter to those track indices; empty means all.
inline mtvg::Interval matched_filter(const mtvg::SyntheticDataset& data, const mtvg::SyntheticSpec& spec,
                                     const mtvg::FeatureBundle& bundle, const mtvg::QueryAnnotation& query,
                                     const std::vector<int>& tracks = {}) {
    const int T = bundle.rows();
    std::vector<double> r(static_cast<std::size_t>(T), 0.0);
    double amplitude = 0.0;
    for (int k = 0; k < spec.n_tracks; ++k) {
        if (!tracks.empty() && std::find(tracks.begin(), tracks.end(), k) == tracks.end()) continue;
        const Eigen::VectorXd p = mtvg::planted_pattern(data, spec, k, query.embedding);
        const double pn = p.norm();
        if (pn == 0.0) continue;
        amplitude += pn;
        for (int t = 0; t < T; ++t) {
            r[static_cast<std::size_t>(t)] += bundle.tracks[static_cast<std::size_t>(k)].data.row(t).cast<double>().dot(p) / pn;
        }
    }
    double best = -1e300;
    double run = 0.0;
    int best_start = 0, best_end = 0, run_start = 0;
    for (int t = 0; t < T; ++t) {
        const double x = r[static_cast<std::size_t>(t)] - amplitude / 2.0;
        if (run <= 0.0) {
            run = x;
            run_start = t;
        } else {
            run += x;
        }
        if (run > best) {
            best = run;
            best_start = run_start;
            best_end = t;
        }
    }
    return mtvg::Interval{double(best_start), double(best_end + 1)};
}

// Fraction of queries the matched filter localizes with IoU >= threshold.
inline double matched_filter_recall(const mtvg::SyntheticDataset& data, const mtvg::SyntheticSpec& spec,
                                    double threshold, const std::vector<int>& tracks = {}) {
    int hits = 0, total = 0;
    for (std::size_t v = 0; v < data.bundles.size(); ++v) {
        for (const auto& q : data.annotations[v].queries) {
            ++total;
            if (mtvg::temporal_iou(matched_filter(data, spec, data.bundles[v], q, tracks), q.gt) >= threshold) ++hits;
        }
    }
    return total == 0 ? 0.0 : double(hits) / total;
}

}  // namespace testing
