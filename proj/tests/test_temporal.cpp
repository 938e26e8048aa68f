#include "oracles.hpp"
#include "support.hpp"

#include "mtvg/errors.hpp"
#include "mtvg/temporal.hpp"

#include <doctest.h>

#include <limits>

using namespace mtvg;

using testing::rational_iou;

TEST_SUITE("temporal") {

TEST_CASE("temporal_iou examples") {
    CHECK(temporal_iou({0, 10}, {0, 10}) == 1.0);
    CHECK(temporal_iou({0, 10}, {20, 30}) == 0.0);
    CHECK(temporal_iou({0, 10}, {10, 30}) == 0.0);
    CHECK(temporal_iou({0, 10}, {5, 15}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("temporal_iou matches exact rational arithmetic") {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Interval a = testing::random_interval(rng);
        const Interval b = testing::random_interval(rng);
        const double iou = temporal_iou(a, b);
        worst = std::max(worst, std::abs(iou - rational_iou(a, b)));
        REQUIRE(iou == temporal_iou(b, a));
        REQUIRE(temporal_iou(a, a) == 1.0);
        REQUIRE(iou >= 0.0);
        REQUIRE(iou <= 1.0);
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("Interval::make validates") {
    CHECK_THROWS_AS(Interval::make(5, 5), InvalidArgument);
    CHECK_THROWS_AS(Interval::make(5, 4), InvalidArgument);
    CHECK_THROWS_AS(Interval::make(-1, 4), InvalidArgument);
    CHECK_THROWS_AS(Interval::make(0, std::numeric_limits<double>::infinity()), InvalidArgument);
    CHECK(Interval::make(1, 2).length() == 1.0);
}

TEST_CASE("clip_interval examples") {
    CHECK(ClipGrid(3000, 128).clip_interval(0) == Interval{0, 23.4375});
    CHECK(ClipGrid(300, 128).clip_interval(0) == Interval{0, 2.34375});
    CHECK(ClipGrid(128, 128).clip_interval(5) == Interval{5, 6});
    CHECK_THROWS_AS(ClipGrid(128, 128).clip_interval(128), InvalidArgument);
    CHECK_THROWS_AS(ClipGrid(128, 128).clip_interval(-1), InvalidArgument);
    CHECK_THROWS_AS(ClipGrid(0, 128), InvalidArgument);
    CHECK_THROWS_AS(ClipGrid(10, 0), InvalidArgument);
}

TEST_CASE("candidate_interval examples") {
    CHECK(ClipGrid(128, 128).candidate_interval(0, 127) == Interval{0, 128});
    CHECK(ClipGrid(128, 128).candidate_interval(3, 3) == Interval{3, 4});
    CHECK(ClipGrid(3000, 128).candidate_interval(0, 1) == Interval{0, 46.875});
    CHECK_THROWS_AS(ClipGrid(128, 128).candidate_interval(4, 3), InvalidArgument);
    CHECK_THROWS_AS(ClipGrid(128, 128).candidate_interval(0, 128), InvalidArgument);
}

TEST_CASE("clips tile the video and candidate bounds are monotone") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const ClipGrid g(testing::uniform(rng, 0.5, 5000.0), testing::uniform_int(rng, 1, 200));
        double prev_end = 0.0;
        for (int p = 0; p < g.n_clips(); ++p) {
            const Interval c = g.clip_interval(p);
            REQUIRE(std::abs(c.start_s - prev_end) <= 1e-9);
            prev_end = c.end_s;
        }
        CHECK(prev_end == g.duration_s());
        const int n = g.n_clips();
        for (int k = 0; k < 50; ++k) {
            const int i = testing::uniform_int(rng, 0, n - 1);
            const int j = testing::uniform_int(rng, i, n - 1);
            const Interval c = g.candidate_interval(i, j);
            if (j + 1 < n) REQUIRE(g.candidate_interval(i, j + 1).end_s > c.end_s);
            if (i + 1 <= j) REQUIRE(g.candidate_interval(i + 1, j).start_s > c.start_s);
        }
    }
}

TEST_CASE("dense candidate counts") {
    CHECK(dense_candidates(1).count() == 1);
    CHECK(dense_candidates(2).count() == 3);
    CHECK(dense_candidates(128).count() == 8256);
    const auto m = dense_candidates(5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            CHECK(m.valid(i, j) == (i <= j));
        }
    }
    CHECK_FALSE(m.valid(-1, 0));
    CHECK_FALSE(m.valid(0, 5));
}

TEST_CASE("strided mask keeps aligned spans and the tail") {
    const auto m = CandidateMask::dense(7, 3);
    for (const Cell& c : m.cells()) {
        CHECK(c.i % 3 == 0);
        CHECK(((c.j + 1) % 3 == 0 || c.j == 6));
    }
    CHECK(m.valid(0, 6));
    CHECK(m.valid(3, 5));
    CHECK_FALSE(m.valid(1, 2));
    CHECK(CandidateMask::dense(9, 1) == dense_candidates(9));
    CHECK_THROWS_AS(CandidateMask::dense(4, 0), InvalidArgument);
}

TEST_CASE("best_candidate") {
    SUBCASE("single valid entry") {
        ScoreMap2D m(dense_candidates(1), MapKind::combined);
        m.set(0, 0, 0.2);
        CHECK(best_candidate(m) == Cell{0, 0});
    }
    SUBCASE("ties go to the smallest (i, j)") {
        ScoreMap2D m(dense_candidates(6), MapKind::combined);
        for (const Cell& c : m.mask().cells()) m.set(c.i, c.j, 0.5);
        CHECK(best_candidate(m) == Cell{0, 0});
        m.set(2, 4, 0.9);
        m.set(2, 3, 0.9);
        m.set(3, 3, 0.9);
        CHECK(best_candidate(m) == Cell{2, 3});
    }
    SUBCASE("matches exhaustive scan") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 300; ++trial) {
            const int n = testing::uniform_int(rng, 1, 32);
            ScoreMap2D m(dense_candidates(n), MapKind::combined);
            for (const Cell& c : m.mask().cells()) {
                // Coarse values force plenty of ties.
                m.set(c.i, c.j, testing::uniform_int(rng, 0, 9) / 10.0);
            }
            Cell want{-1, -1};
            double best = -1.0;
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    if (m.at(i, j) > best) {
                        best = m.at(i, j);
                        want = {i, j};
                    }
                }
            }
            REQUIRE(best_candidate(m) == want);
        }
    }
    SUBCASE("invalid cells hold NaN") {
        ScoreMap2D m(dense_candidates(3), MapKind::combined);
        CHECK(std::isnan(m.at(2, 0)));
    }
}

}
