#include "support.hpp"

#include "mtvg/errors.hpp"
#include "mtvg/fusion.hpp"

#include <doctest.h>

using namespace mtvg;

namespace {

FeatureBundle random_bundle(std::mt19937_64& rng, int rows, const std::vector<int>& dims) {
    FeatureBundle b;
    b.video_id = "v";
    b.duration_s = rows;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        b.tracks.push_back(testing::random_track(rng, "t" + std::to_string(k), rows, dims[k]));
    }
    return b;
}

double max_rel_err(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
    const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
    return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("softmax") {
    CHECK(softmax(Eigen::Vector2d(0.0, std::log(3.0))).isApprox(Eigen::Vector2d(0.25, 0.75), 1e-15));
    CHECK(softmax(Eigen::VectorXd::Constant(5, 1.7)).isApprox(Eigen::VectorXd::Constant(5, 0.2), 1e-15));
    CHECK(softmax(Eigen::Vector3d(1000.0, 0.0, -1000.0)).allFinite());
    CHECK_THROWS_AS(softmax(Eigen::VectorXd()), InvalidArgument);

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10000; ++trial) {
        const Eigen::VectorXd l = 10.0 * testing::gaussian_vec(rng, testing::uniform_int(rng, 1, 12));
        const Eigen::VectorXd p = softmax(l);
        REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
        REQUIRE(p.minCoeff() > 0.0);
    }
}

TEST_CASE("normalize_rows leaves zero rows alone") {
    Eigen::MatrixXd m(2, 2);
    m << 3, 4, 0, 0;
    const Eigen::MatrixXd n = normalize_rows(m);
    CHECK(n.row(0).isApprox(Eigen::RowVector2d(0.6, 0.8), 1e-15));
    CHECK(n.row(1).isZero());
}

TEST_CASE("concat path examples") {
    SUBCASE("identity pipeline on a unit-norm constant track") {
        FeatureBundle b;
        b.video_id = "v";
        b.duration_s = 12;
        Eigen::RowVector3f row(0.6f, 0.0f, 0.8f);
        b.tracks.push_back({"a", row.replicate(12, 1)});
        ConcatFusionParams p{layout_of(b), Eigen::MatrixXd::Identity(3, 3)};
        const Eigen::MatrixXd out = concat_fuse(b, ClipGrid(12, 4), p);
        CHECK(out.isApprox(row.cast<double>().replicate(4, 1), 1e-7));
    }
    SUBCASE("orthogonal unit tracks concatenate to (u, v) / sqrt 2") {
        FeatureBundle b;
        b.video_id = "v";
        b.duration_s = 4;
        b.tracks.push_back({"u", Eigen::RowVector2f(5.0f, 0.0f).replicate(4, 1)});
        b.tracks.push_back({"v", Eigen::RowVector2f(0.0f, 5.0f).replicate(4, 1)});
        const Eigen::MatrixXd in = concat_fusion_input(b, ClipGrid(4, 2));
        Eigen::RowVector4d want(1, 0, 0, 1);
        want /= std::sqrt(2.0);
        CHECK(in.row(0).isApprox(want, 1e-15));
        CHECK(in.row(1).isApprox(want, 1e-15));
    }
    SUBCASE("step-by-step reference, T=8 n=4 K=2") {
        std::mt19937_64 rng(2);
        const FeatureBundle b = random_bundle(rng, 8, {3, 2});
        const ConcatFusionParams p = init_concat_params(layout_of(b), 6, 5);
        Eigen::MatrixXd ref(4, 6);
        for (int piece = 0; piece < 4; ++piece) {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(5);
            for (int t = 2 * piece; t < 2 * piece + 2; ++t) {
                Eigen::VectorXd row(5);
                row << b.tracks[0].data.row(t).transpose().cast<double>(), b.tracks[1].data.row(t).transpose().cast<double>();
                acc += row / row.norm();
            }
            ref.row(piece) = (p.projection * (acc / 2.0)).transpose();
        }
        CHECK((concat_fuse(b, ClipGrid(8, 4), p) - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("layout mismatch") {
        std::mt19937_64 rng(3);
        const FeatureBundle b = random_bundle(rng, 8, {3, 2});
        const ConcatFusionParams p = init_concat_params({{"t0", 3}, {"t1", 4}}, 6, 5);
        CHECK_THROWS_AS(concat_fuse(b, ClipGrid(8, 4), p), ShapeError);
    }
}

TEST_CASE("weighted path examples") {
    std::mt19937_64 rng(4);
    const FeatureBundle b = random_bundle(rng, 20, {3, 5, 4});
    WeightedFusionParams p = init_weighted_params(layout_of(b), 6, 7);
    const ClipGrid g(20, 5);

    SUBCASE("equal logits weigh tracks equally") {
        const auto in = weighted_fusion_inputs(b, g);
        Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(5, 6);
        for (int k = 0; k < 3; ++k) ref += in[k] * p.projections[k].transpose() / 3.0;
        CHECK((weighted_fuse(b, g, p) - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("each track is normalized per row before pooling") {
        const auto in = weighted_fusion_inputs(b, g);
        const Eigen::MatrixXd x = b.tracks[1].data.cast<double>();
        CHECK((in[1] - pool_to_grid(normalize_rows(x), 5)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("gamma = 0 annihilates") {
        p.gamma = 0.0;
        CHECK(weighted_fuse(b, g, p).isZero());
    }
    SUBCASE("logit shift invariance") {
        p.logits = testing::gaussian_vec(rng, 3);
        const Eigen::MatrixXd base = weighted_fuse(b, g, p);
        p.logits.array() += 13.25;
        CHECK((weighted_fuse(b, g, p) - base).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SUBCASE("positive per-track scaling is absorbed") {
        p.logits = testing::gaussian_vec(rng, 3);
        const Eigen::MatrixXd base = weighted_fuse(b, g, p);
        // Powers of two scale float storage exactly.
        for (const float c : {0.125f, 4.0f, 1024.0f}) {
            for (int k = 0; k < 3; ++k) {
                FeatureBundle scaled = b;
                scaled.tracks[k].data *= c;
                CHECK((weighted_fuse(scaled, g, p) - base).cwiseAbs().maxCoeff() <= 1e-12);
            }
        }
        // Arbitrary factors, in double so storage rounding stays out of it.
        for (const double c : {37.5, 1e-3, 6.02e5}) {
            const Eigen::MatrixXd x = b.tracks[1].data.cast<double>();
            CHECK((normalize_rows(c * x) - normalize_rows(x)).cwiseAbs().maxCoeff() <= 1e-15);
        }
    }
}

TEST_CASE("weighted_fuse_grad") {
    std::mt19937_64 rng(5);
    SUBCASE("gamma gradient is <upstream, sum w_k v_k>") {
        const FeatureBundle b = random_bundle(rng, 12, {3, 4});
        WeightedFusionParams p = init_weighted_params(layout_of(b), 5, 1);
        p.logits = testing::gaussian_vec(rng, 2);
        p.gamma = 1.7;
        const auto in = weighted_fusion_inputs(b, ClipGrid(12, 6));
        const Eigen::MatrixXd up = testing::gaussian(rng, 6, 5);
        const Eigen::MatrixXd mix = weighted_fuse(in, p) / p.gamma;
        CHECK(weighted_fuse_grad(in, p, up).gamma == doctest::Approx((up.array() * mix.array()).sum()).epsilon(1e-12));
    }
    SUBCASE("single track has zero logit gradient") {
        const FeatureBundle b = random_bundle(rng, 12, {3});
        const WeightedFusionParams p = init_weighted_params(layout_of(b), 5, 1);
        const auto in = weighted_fusion_inputs(b, ClipGrid(12, 6));
        CHECK(weighted_fuse_grad(in, p, testing::gaussian(rng, 6, 5)).logits(0) == 0.0);
    }
    SUBCASE("central differences on 50 random instances") {
        const double h = 1e-5;
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int K = testing::uniform_int(rng, 1, 4);
            std::vector<int> dims;
            for (int k = 0; k < K; ++k) dims.push_back(testing::uniform_int(rng, 1, 5));
            const int n = testing::uniform_int(rng, 1, 6);
            const FeatureBundle b = random_bundle(rng, testing::uniform_int(rng, n, 3 * n), dims);
            const auto in = weighted_fusion_inputs(b, ClipGrid(b.duration_s, n));
            WeightedFusionParams p = init_weighted_params(layout_of(b), testing::uniform_int(rng, 1, 5), rng());
            p.logits = testing::gaussian_vec(rng, K);
            p.gamma = testing::uniform(rng, 0.5, 2.0);
            const Eigen::MatrixXd up = testing::gaussian(rng, n, p.output_dim());
            auto f = [&](const WeightedFusionParams& q) { return (up.array() * weighted_fuse(in, q).array()).sum(); };
            const WeightedFusionGrad g = weighted_fuse_grad(in, p, up);

            for (int k = 0; k < K; ++k) {
                Eigen::MatrixXd num(p.projections[k].rows(), p.projections[k].cols());
                for (Eigen::Index e = 0; e < num.size(); ++e) {
                    WeightedFusionParams a = p, c = p;
                    a.projections[k].data()[e] += h;
                    c.projections[k].data()[e] -= h;
                    num.data()[e] = (f(a) - f(c)) / (2 * h);
                }
                worst = std::max(worst, max_rel_err(g.projections[k], num));
            }
            Eigen::VectorXd num_l(K);
            for (int k = 0; k < K; ++k) {
                WeightedFusionParams a = p, c = p;
                a.logits[k] += h;
                c.logits[k] -= h;
                num_l[k] = (f(a) - f(c)) / (2 * h);
            }
            worst = std::max(worst, max_rel_err(g.logits, num_l));
            WeightedFusionParams a = p, c = p;
            a.gamma += h;
            c.gamma -= h;
            worst = std::max(worst, std::abs(g.gamma - (f(a) - f(c)) / (2 * h)) / std::max(1.0, std::abs(g.gamma)));
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("concat_fuse_grad") {
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd in = testing::gaussian(rng, 5, 4);
    ConcatFusionParams p{{{"a", 4}}, testing::gaussian(rng, 3, 4)};
    const Eigen::MatrixXd up = testing::gaussian(rng, 5, 3);
    // The map is linear in the projection, so the difference quotient is exact up to rounding.
    const Eigen::MatrixXd g = concat_fuse_grad(in, up);
    for (Eigen::Index e = 0; e < p.projection.size(); ++e) {
        ConcatFusionParams a = p;
        a.projection.data()[e] += 1.0;
        const double d = (up.array() * (concat_fuse(in, a) - concat_fuse(in, p)).array()).sum();
        CHECK(g.data()[e] == doctest::Approx(d).epsilon(1e-12));
    }
}

TEST_CASE("init and warm start") {
    const TrackLayout six{{"B", 4}, {"C", 5}, {"D", 6}, {"E", 3}, {"F", 2}, {"G", 7}};
    TrackLayout seven = six;
    seven.push_back({"H", 8});

    SUBCASE("fresh init bounds") {
        const auto c = init_concat_params(six, 10, 1);
        CHECK(c.projection.rows() == 10);
        CHECK(c.projection.cols() == 27);
        CHECK(c.projection.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(27.0));
        const auto w = init_weighted_params(six, 10, 1);
        CHECK(w.gamma == 1.0);
        CHECK(w.logits.isZero());
        CHECK(w.projections[2].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
        CHECK(init_concat_params(six, 10, 1).projection == c.projection);
    }
    SUBCASE("identical layout copies verbatim") {
        WeightedFusionParams w = init_weighted_params(six, 10, 2);
        w.logits << 0.1, -0.4, 0.3, 0.9, 0.0, -1.0;
        w.gamma = 1.3;
        const auto back = std::get<WeightedFusionParams>(warm_start_params(w, six, 9));
        CHECK(back.logits == w.logits);
        CHECK(back.gamma == w.gamma);
        for (std::size_t k = 0; k < 6; ++k) CHECK(back.projections[k] == w.projections[k]);

        const ConcatFusionParams c = init_concat_params(six, 10, 3);
        CHECK(std::get<ConcatFusionParams>(warm_start_params(c, six, 9)).projection == c.projection);
    }
    SUBCASE("B..G extended with H") {
        WeightedFusionParams w = init_weighted_params(six, 10, 2);
        w.logits << 0.1, -0.4, 0.3, 0.9, 0.0, -1.0;
        const auto ext = std::get<WeightedFusionParams>(warm_start_params(w, seven, 9));
        REQUIRE(ext.projections.size() == 7);
        for (std::size_t k = 0; k < 6; ++k) CHECK(ext.projections[k] == w.projections[k]);
        CHECK(ext.projections[6].rows() == 10);
        CHECK(ext.projections[6].cols() == 8);
        CHECK(ext.logits[6] == doctest::Approx(w.logits.mean()));
        // The new track starts at the geometric-mean weight, 1/K when old logits are equal.
        const auto eq = std::get<WeightedFusionParams>(warm_start_params(init_weighted_params(six, 10, 2), seven, 9));
        CHECK(softmax(eq.logits)[6] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

        const ConcatFusionParams c = init_concat_params(six, 10, 3);
        const auto cext = std::get<ConcatFusionParams>(warm_start_params(c, seven, 9));
        CHECK(cext.projection.leftCols(27) == c.projection);
        CHECK(cext.projection.cols() == 35);
    }
    SUBCASE("reordered layouts keep tracks by id") {
        const ConcatFusionParams c = init_concat_params({{"a", 2}, {"b", 3}}, 4, 1);
        const auto r = std::get<ConcatFusionParams>(warm_start_params(c, {{"b", 3}, {"x", 1}, {"a", 2}}, 2));
        CHECK(r.projection.leftCols(3) == c.projection.rightCols(3));
        CHECK(r.projection.rightCols(2) == c.projection.leftCols(2));
    }
    SUBCASE("old tracks must be a subset") {
        const auto w = init_weighted_params(six, 10, 2);
        CHECK_THROWS_AS(warm_start_params(w, {{"B", 4}}, 1), InvalidArgument);
        TrackLayout changed = seven;
        changed[0].dim = 5;
        CHECK_THROWS_AS(warm_start_params(w, changed, 1), ShapeError);
    }
}

}
