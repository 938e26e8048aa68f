#pragma once

#include "mtvg/feature_io.hpp"
#include "mtvg/temporal.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mtvg {

/// A training sub-clip and the queries whose moments it fully contains.
struct CutSpec {
    Interval cut;
    std::vector<std::string> retained_query_ids;  // start-time order
};

struct CutConfig {
    int min_queries = 1;
    double min_len_s = 0.0;
};

/// Cut points forbidden by one or more overlapping moments: the merge of GT
/// intervals whose interiors overlap, in start order.
struct MomentBlock {
    Interval span;
    std::vector<int> queries;  // indices into AnnotationSet::queries, start order
};

std::vector<MomentBlock> moment_blocks(const AnnotationSet& ann);

/// Allowed cut-point ranges around the blocks: gap 0 precedes block 0, gap k
/// lies between block k-1 and block k, the last gap follows the last block.
/// A gap may be a single point when two blocks touch.
std::vector<Interval> cut_gaps(const AnnotationSet& ann, const std::vector<MomentBlock>& blocks);

/// Samples a run of consecutive blocks uniformly among feasible runs, then a
/// start point uniformly in the gap before it and an end point uniformly in
/// the gap after it. Returns nullopt when no run satisfies the config; the
/// caller then trains on the full video.
std::optional<CutSpec> sample_cut(const AnnotationSet& ann, std::mt19937_64& rng, const CutConfig& cfg = {});

/// Same, with the run of blocks fixed to [first_block, last_block].
std::optional<CutSpec> sample_cut_for_run(const AnnotationSet& ann, int first_block, int last_block,
                                          std::mt19937_64& rng, const CutConfig& cfg = {});

/// Containment and boundary-exteriority check against every moment of `ann`.
bool is_valid_cut(const AnnotationSet& ann, const CutSpec& cut);

/// Retained queries shifted into cut-local time; other queries are dropped.
AnnotationSet remap(const AnnotationSet& ann, const CutSpec& cut);

/// Keeps feature rows t in [floor(start), ceil(end)); duration becomes the cut length.
FeatureBundle slice_bundle(const FeatureBundle& bundle, const CutSpec& cut);

/// Eight clips' worth of the full video's resolution.
double default_min_cut_len(double duration_s, int n_clips);

}  // namespace mtvg
