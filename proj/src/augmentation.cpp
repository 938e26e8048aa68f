#include "mtvg/augmentation.hpp"

#include "mtvg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtvg {

namespace {

constexpr int kMaxRejections = 64;

std::vector<int> start_order(const AnnotationSet& ann) {
    std::vector<int> idx(ann.queries.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const auto& ga = ann.queries[static_cast<std::size_t>(a)].gt;
        const auto& gb = ann.queries[static_cast<std::size_t>(b)].gt;
        if (ga.start_s != gb.start_s) {
            return ga.start_s < gb.start_s;
        }
        return ga.end_s < gb.end_s;
    });
    return idx;
}

struct Run {
    int first = 0;
    int last = 0;
};

bool run_feasible(const std::vector<MomentBlock>& blocks, const std::vector<Interval>& gaps, Run run,
                  const CutConfig& cfg) {
    int count = 0;
    for (int b = run.first; b <= run.last; ++b) {
        count += static_cast<int>(blocks[static_cast<std::size_t>(b)].queries.size());
    }
    if (count < std::max(1, cfg.min_queries)) {
        return false;
    }
    const double longest = gaps[static_cast<std::size_t>(run.last + 1)].end_s - gaps[static_cast<std::size_t>(run.first)].start_s;
    return longest >= cfg.min_len_s;
}

double uniform_in(const Interval& gap, std::mt19937_64& rng) {
    if (gap.end_s <= gap.start_s) {
        return gap.start_s;
    }
    std::uniform_real_distribution<double> dist(gap.start_s, gap.end_s);
    return std::clamp(dist(rng), gap.start_s, gap.end_s);
}

}  // namespace

std::vector<MomentBlock> moment_blocks(const AnnotationSet& ann) {
    std::vector<MomentBlock> blocks;
    for (int q : start_order(ann)) {
        const Interval gt = ann.queries[static_cast<std::size_t>(q)].gt;
        if (!blocks.empty() && gt.start_s < blocks.back().span.end_s) {
            auto& b = blocks.back();
            b.span.end_s = std::max(b.span.end_s, gt.end_s);
            b.queries.push_back(q);
        } else {
            blocks.push_back({gt, {q}});
        }
    }
    return blocks;
}

std::vector<Interval> cut_gaps(const AnnotationSet& ann, const std::vector<MomentBlock>& blocks) {
    std::vector<Interval> gaps;
    gaps.reserve(blocks.size() + 1);
    double prev_end = 0.0;
    for (const auto& b : blocks) {
        gaps.push_back(Interval{prev_end, b.span.start_s});
        prev_end = b.span.end_s;
    }
    gaps.push_back(Interval{prev_end, ann.duration_s});
    return gaps;
}

std::optional<CutSpec> sample_cut_for_run(const AnnotationSet& ann, int first_block, int last_block,
                                          std::mt19937_64& rng, const CutConfig& cfg) {
    const auto blocks = moment_blocks(ann);
    if (first_block < 0 || last_block < first_block || last_block >= static_cast<int>(blocks.size())) {
        throw InvalidArgument("block run out of range");
    }
    const auto gaps = cut_gaps(ann, blocks);
    const Run run{first_block, last_block};
    if (!run_feasible(blocks, gaps, run, cfg)) {
        return std::nullopt;
    }
    const Interval& before = gaps[static_cast<std::size_t>(first_block)];
    const Interval& after = gaps[static_cast<std::size_t>(last_block + 1)];

    double start = before.start_s;
    double end = after.end_s;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        const double s = uniform_in(before, rng);
        const double e = uniform_in(after, rng);
        if (e - s >= cfg.min_len_s) {
            start = s;
            end = e;
            break;
        }
    }

    CutSpec spec;
    spec.cut = Interval{start, end};
    for (int b = first_block; b <= last_block; ++b) {
        for (int q : blocks[static_cast<std::size_t>(b)].queries) {
            spec.retained_query_ids.push_back(ann.queries[static_cast<std::size_t>(q)].query_id);
        }
    }
    return spec;
}

std::optional<CutSpec> sample_cut(const AnnotationSet& ann, std::mt19937_64& rng, const CutConfig& cfg) {
    if (ann.queries.empty()) {
        return std::nullopt;
    }
    const auto blocks = moment_blocks(ann);
    const auto gaps = cut_gaps(ann, blocks);
    std::vector<Run> feasible;
    const int nb = static_cast<int>(blocks.size());
    for (int a = 0; a < nb; ++a) {
        for (int b = a; b < nb; ++b) {
            if (run_feasible(blocks, gaps, {a, b}, cfg)) {
                feasible.push_back({a, b});
            }
        }
    }
    if (feasible.empty()) {
        return std::nullopt;
    }
    std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
    const Run run = feasible[pick(rng)];
    return sample_cut_for_run(ann, run.first, run.last, rng, cfg);
}

bool is_valid_cut(const AnnotationSet& ann, const CutSpec& cut) {
    if (!is_valid(cut.cut) || cut.cut.end_s > ann.duration_s || cut.retained_query_ids.empty()) {
        return false;
    }
    for (const auto& q : ann.queries) {
        if (q.gt.interior_contains(cut.cut.start_s) || q.gt.interior_contains(cut.cut.end_s)) {
            return false;
        }
    }
    for (const auto& id : cut.retained_query_ids) {
        auto it = std::find_if(ann.queries.begin(), ann.queries.end(),
                               [&](const QueryAnnotation& q) { return q.query_id == id; });
        if (it == ann.queries.end() || !cut.cut.contains(it->gt)) {
            return false;
        }
    }
    return true;
}

AnnotationSet remap(const AnnotationSet& ann, const CutSpec& cut) {
    if (!is_valid_cut(ann, cut)) {
        throw InvalidArgument("cut is not valid for video '" + ann.video_id + "'");
    }
    AnnotationSet out;
    out.video_id = ann.video_id;
    out.duration_s = cut.cut.length();
    for (const auto& q : ann.queries) {
        if (std::find(cut.retained_query_ids.begin(), cut.retained_query_ids.end(), q.query_id) ==
            cut.retained_query_ids.end()) {
            continue;
        }
        QueryAnnotation r = q;
        r.gt.start_s = std::max(0.0, q.gt.start_s - cut.cut.start_s);
        r.gt.end_s = std::min(out.duration_s, q.gt.end_s - cut.cut.start_s);
        out.queries.push_back(std::move(r));
    }
    return out;
}

FeatureBundle slice_bundle(const FeatureBundle& bundle, const CutSpec& cut) {
    if (!is_valid(cut.cut) || cut.cut.end_s > bundle.duration_s) {
        throw InvalidArgument("cut lies outside video '" + bundle.video_id + "'");
    }
    const int T = bundle.rows();
    const int lo = std::clamp(static_cast<int>(std::floor(cut.cut.start_s)), 0, T);
    const int hi = std::clamp(static_cast<int>(std::ceil(cut.cut.end_s)), 0, T);
    if (hi <= lo) {
        throw InvalidArgument("cut selects no feature rows of video '" + bundle.video_id + "'");
    }
    FeatureBundle out;
    out.video_id = bundle.video_id;
    out.duration_s = cut.cut.length();
    for (const auto& t : bundle.tracks) {
        out.tracks.push_back({t.extractor_id, t.data.middleRows(lo, hi - lo)});
    }
    return out;
}

double default_min_cut_len(double duration_s, int n_clips) { return 8.0 * duration_s / n_clips; }

}  // namespace mtvg
