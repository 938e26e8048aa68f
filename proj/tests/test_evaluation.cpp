#include "support.hpp"

#include "mtvg/errors.hpp"
#include "mtvg/evaluation.hpp"

#include <doctest.h>

#include <numeric>

using namespace mtvg;

TEST_SUITE("evaluation") {

TEST_CASE("recall examples") {
    const IntervalMap gts{{"a", {5, 15}}};
    const IntervalMap third{{"a", {0, 10}}};
    CHECK(recall_at_1(third, gts, 0.3) == 1.0);
    CHECK(recall_at_1(third, gts, 0.5) == 0.0);

    const IntervalMap two_gt{{"a", {0, 10}}, {"b", {20, 30}}};
    const IntervalMap two_pred{{"a", {0, 8}}, {"b", {50, 60}}};  // IoU 0.8 and a miss
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.8}) CHECK(recall_at_1(two_pred, two_gt, t) == 0.5);
    CHECK(recall_at_1(two_pred, two_gt, 0.81) == 0.0);

    CHECK(recall_at_1({}, gts, 0.3) == 0.0);
    CHECK_THROWS_AS(recall_at_1(gts, {}, 0.3), InvalidArgument);
}

TEST_CASE("perfect predictor") {
    std::mt19937_64 rng(1);
    IntervalMap gts;
    for (int k = 0; k < 50; ++k) gts["q" + std::to_string(k)] = testing::random_interval(rng);
    const EvalReport r = evaluate(gts, gts);
    CHECK(r.n_queries == 50);
    CHECK(r.avg == 1.0);
    for (const auto& [t, v] : r.r1_at) CHECK(v == 1.0);
}

TEST_CASE("average of a tabulated row") {
    // 10000 queries split so that the three recalls are 30.63 / 20.84 / 10.04 percent.
    IntervalMap gts, preds;
    for (int k = 0; k < 10000; ++k) {
        const std::string key = std::to_string(k);
        gts[key] = {0, 100};
        const double end = k < 1004 ? 80 : k < 2084 ? 60 : k < 3063 ? 40 : 10;
        preds[key] = {0, end};
    }
    const EvalReport r = evaluate(preds, gts);
    CHECK(r.r1_at.at(0.3) == doctest::Approx(0.3063).epsilon(1e-15));
    CHECK(r.r1_at.at(0.7) == doctest::Approx(0.1004).epsilon(1e-15));
    CHECK(std::abs(r.avg - (0.3063 + 0.2084 + 0.1004) / 3) <= 1e-12);
    const std::string table = render_report_table({{"C3D", r}});
    CHECK(table.find("C3D     |   30.63 |   20.84 |   10.04 |   20.50") != std::string::npos);
}

TEST_CASE("reports are monotone and order invariant") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        IntervalMap gts, preds;
        const int n = testing::uniform_int(rng, 1, 30);
        for (int k = 0; k < n; ++k) {
            const std::string key = "q" + std::to_string(k);
            gts[key] = testing::random_interval(rng, 50);
            if (testing::uniform(rng, 0, 1) < 0.9) preds[key] = testing::random_interval(rng, 50);
        }
        const EvalReport r = evaluate(preds, gts);
        REQUIRE(r.r1_at.at(0.3) >= r.r1_at.at(0.5));
        REQUIRE(r.r1_at.at(0.5) >= r.r1_at.at(0.7));
        REQUIRE(std::abs(r.avg - (r.r1_at.at(0.3) + r.r1_at.at(0.5) + r.r1_at.at(0.7)) / 3) <= 1e-12);

        // Renaming keys permutes the map's iteration order without changing pairs.
        IntervalMap g2, p2;
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int k = 0; k < n; ++k) {
            const std::string from = "q" + std::to_string(k);
            const std::string to = "z" + std::to_string(perm[static_cast<std::size_t>(k)]);
            g2[to] = gts[from];
            if (preds.count(from)) p2[to] = preds[from];
        }
        const EvalReport r2 = evaluate(p2, g2);
        REQUIRE(r2.r1_at == r.r1_at);
    }
}

TEST_CASE("report JSON round trip") {
    EvalReport r;
    r.r1_at = {{0.3, 0.75}, {0.5, 0.5}, {0.7, 0.25}};
    r.avg = 0.5;
    r.n_queries = 4;
    std::string name;
    const EvalReport back = report_from_json(report_to_json(r, "concat"), &name);
    CHECK(name == "concat");
    CHECK(back.r1_at == r.r1_at);
    CHECK(back.avg == r.avg);
    CHECK(back.n_queries == 4);
    CHECK_THROWS_AS(report_from_json("{\"avg\": 1}"), ParseError);
}

}
