#include "oracles.hpp"
#include "support.hpp"

#include "mtvg/augmentation.hpp"
#include "mtvg/errors.hpp"

#include <doctest.h>

#include <set>

using namespace mtvg;

namespace {

QueryAnnotation query(const std::string& id, double s, double e) { return {id, "", Eigen::Vector2d(1, 0), {s, e}}; }

}  // namespace

using testing::random_annotations;
using testing::cut_violation;

TEST_SUITE("augmentation") {

TEST_CASE("single moment geometry") {
    AnnotationSet ann{"v", 60, {query("a", 10, 20)}};
    std::mt19937_64 rng(1);
    for (int k = 0; k < 1000; ++k) {
        const auto cut = sample_cut(ann, rng);
        REQUIRE(cut);
        REQUIRE(cut->cut.start_s >= 0.0);
        REQUIRE(cut->cut.start_s <= 10.0);
        REQUIRE(cut->cut.end_s >= 20.0);
        REQUIRE(cut->cut.end_s <= 60.0);
        REQUIRE(cut->retained_query_ids == std::vector<std::string>{"a"});
    }
}

TEST_CASE("tiling moments leave only the whole video for the full run") {
    AnnotationSet ann{"v", 60, {query("a", 0, 30), query("b", 30, 60)}};
    std::mt19937_64 rng(2);
    const auto cut = sample_cut_for_run(ann, 0, 1, rng);
    REQUIRE(cut);
    CHECK(cut->cut == Interval{0, 60});
    CHECK(cut->retained_query_ids == std::vector<std::string>{"a", "b"});
    // A cut point exactly on a moment boundary is allowed.
    const auto first = sample_cut_for_run(ann, 0, 0, rng);
    REQUIRE(first);
    CHECK(first->cut == Interval{0, 30});
}

TEST_CASE("infeasible configurations signal no cut") {
    std::mt19937_64 rng(3);
    AnnotationSet ann{"v", 60, {query("a", 0, 60)}};
    CHECK(sample_cut(ann, rng, {1, 0.0}));
    CHECK_FALSE(sample_cut(ann, rng, {2, 0.0}));
    CHECK_FALSE(sample_cut(ann, rng, {1, 61.0}));
    AnnotationSet empty{"v", 60, {}};
    CHECK_FALSE(sample_cut(empty, rng));
}

TEST_CASE("overlapping moments form one block") {
    AnnotationSet ann{"v", 100, {query("b", 15, 30), query("a", 10, 20), query("c", 30, 40), query("d", 50, 60)}};
    const auto blocks = moment_blocks(ann);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[0].span == Interval{10, 30});
    CHECK(blocks[0].queries == std::vector<int>{1, 0});
    CHECK(blocks[1].span == Interval{30, 40});
    const auto gaps = cut_gaps(ann, blocks);
    REQUIRE(gaps.size() == 4);
    CHECK(gaps[0] == Interval{0, 10});
    CHECK(gaps[1] == Interval{30, 30});
    CHECK(gaps[3] == Interval{60, 100});
}

TEST_CASE("sampled cuts never violate the contract") {
    std::mt19937_64 rng(4);
    int sampled = 0;
    int violations = 0;
    for (int set = 0; set < 100; ++set) {
        const AnnotationSet ann = random_annotations(rng);
        const double min_len = default_min_cut_len(ann.duration_s, 128);
        for (int k = 0; k < 100; ++k) {
            const auto cut = sample_cut(ann, rng, {1, min_len});
            if (!cut) continue;
            ++sampled;
            const std::string why = cut_violation(ann, *cut);
            if (!why.empty()) {
                ++violations;
                MESSAGE(why);
            }
            REQUIRE(is_valid_cut(ann, *cut));
            REQUIRE(cut->cut.length() >= min_len);

            const AnnotationSet local = remap(ann, *cut);
            REQUIRE(local.duration_s == cut->cut.length());
            REQUIRE(local.queries.size() == cut->retained_query_ids.size());
            for (const auto& q : local.queries) {
                REQUIRE(q.gt.start_s >= 0.0);
                REQUIRE(q.gt.end_s <= local.duration_s);
            }
        }
    }
    CHECK(sampled >= 9000);
    CHECK(violations == 0);
}

TEST_CASE("sampling is deterministic in the seed") {
    std::mt19937_64 gen(5);
    const AnnotationSet ann = random_annotations(gen);
    std::mt19937_64 a(9), b(9);
    for (int k = 0; k < 50; ++k) {
        const auto x = sample_cut(ann, a);
        const auto y = sample_cut(ann, b);
        REQUIRE(x.has_value() == y.has_value());
        if (x) {
            REQUIRE(x->cut == y->cut);
            REQUIRE(x->retained_query_ids == y->retained_query_ids);
        }
    }
}

TEST_CASE("remap") {
    AnnotationSet ann{"v", 60, {query("a", 10, 20), query("b", 40, 50)}};
    const AnnotationSet same = remap(ann, {{0, 60}, {"a", "b"}});
    CHECK(same.duration_s == 60);
    CHECK(same.queries[0].gt == ann.queries[0].gt);
    CHECK(same.queries[1].gt == ann.queries[1].gt);

    const AnnotationSet shifted = remap(ann, {{5, 25}, {"a"}});
    CHECK(shifted.duration_s == 20);
    REQUIRE(shifted.queries.size() == 1);
    CHECK(shifted.queries[0].gt == Interval{5, 15});

    CHECK_THROWS_AS(remap(ann, {{15, 30}, {"a"}}), InvalidArgument);
    CHECK_THROWS_AS(remap(ann, {{5, 25}, {"b"}}), InvalidArgument);
}

TEST_CASE("slice_bundle and resolution") {
    std::mt19937_64 rng(6);
    FeatureBundle b;
    b.video_id = "v";
    b.duration_s = 3000;
    b.tracks.push_back(testing::random_track(rng, "a", 3000, 2));

    CHECK(ClipGrid(3000, 128).clip_len() == 23.4375);
    const FeatureBundle cut = slice_bundle(b, {{1200, 1500}, {"q"}});
    CHECK(cut.duration_s == 300);
    CHECK(ClipGrid(cut.duration_s, 128).clip_len() == 2.34375);
    CHECK(cut.rows() == 300);
    CHECK(cut.tracks[0].data == b.tracks[0].data.middleRows(1200, 300));

    const FeatureBundle whole = slice_bundle(b, {{0, 3000}, {"q"}});
    CHECK(whole.tracks[0].data == b.tracks[0].data);

    const FeatureBundle frac = slice_bundle(b, {{10.5, 20.25}, {"q"}});
    CHECK(frac.rows() == 11);
    CHECK(frac.tracks[0].data.row(0) == b.tracks[0].data.row(10));

    for (int k = 0; k < 1000; ++k) {
        const Interval c = testing::random_interval(rng, 3000);
        const double ratio = ClipGrid(c.length(), 128).clip_len() / ClipGrid(3000, 128).clip_len();
        REQUIRE(std::abs(ratio - c.length() / 3000) <= 1e-12);
    }
    CHECK(default_min_cut_len(3000, 128) == 8 * 23.4375);
}

}
