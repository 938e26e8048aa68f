#include "mtvg/trainer.hpp"

#include "mtvg/augmentation.hpp"
#include "mtvg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace mtvg {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

GroundingModel zeros_like(const GroundingModel& m) {
    GroundingModel g;
    if (const auto* c = std::get_if<ConcatFusionParams>(&m.fusion)) {
        ConcatFusionParams z;
        z.layout = c->layout;
        z.projection = Eigen::MatrixXd::Zero(c->projection.rows(), c->projection.cols());
        g.fusion = std::move(z);
    } else {
        const auto& w = std::get<WeightedFusionParams>(m.fusion);
        WeightedFusionParams z;
        z.layout = w.layout;
        for (const auto& p : w.projections) {
            z.projections.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        }
        z.logits = Eigen::VectorXd::Zero(w.logits.size());
        z.gamma = 0.0;
        g.fusion = std::move(z);
    }
    g.match.moment_projection = Eigen::MatrixXd::Zero(m.match.moment_projection.rows(), m.match.moment_projection.cols());
    g.match.query_projection = Eigen::MatrixXd::Zero(m.match.query_projection.rows(), m.match.query_projection.cols());
    g.match.iou_head = Eigen::VectorXd::Zero(m.match.iou_head.size());
    g.match.iou_bias = 0.0;
    return g;
}

void add_scaled(GroundingModel& model, const GroundingModel& grad, double scale) {
    if (auto* c = std::get_if<ConcatFusionParams>(&model.fusion)) {
        c->projection += scale * std::get<ConcatFusionParams>(grad.fusion).projection;
    } else {
        auto& w = std::get<WeightedFusionParams>(model.fusion);
        const auto& gw = std::get<WeightedFusionParams>(grad.fusion);
        for (std::size_t k = 0; k < w.projections.size(); ++k) {
            w.projections[k] += scale * gw.projections[k];
        }
        w.logits += scale * gw.logits;
        w.gamma += scale * gw.gamma;
    }
    model.match.moment_projection += scale * grad.match.moment_projection;
    model.match.query_projection += scale * grad.match.query_projection;
    model.match.iou_head += scale * grad.match.iou_head;
    model.match.iou_bias += scale * grad.match.iou_bias;
}

Eigen::MatrixXd fuse_input(const VideoBatch& batch, const FusionParams& fusion) {
    if (const auto* c = std::get_if<ConcatFusionParams>(&fusion)) {
        return concat_fuse(std::get<Eigen::MatrixXd>(batch.fusion_input), *c);
    }
    return weighted_fuse(std::get<std::vector<Eigen::MatrixXd>>(batch.fusion_input),
                         std::get<WeightedFusionParams>(fusion));
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) {
        throw InvalidArgument("epochs must be >= 0");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning_rate must be finite and >= 0");
    }
    if (!(0.0 <= iou_scale_min && iou_scale_min < iou_scale_max && iou_scale_max <= 1.0)) {
        throw InvalidArgument("need 0 <= iou_scale_min < iou_scale_max <= 1");
    }
    if (!(temperature > 0.0)) {
        throw InvalidArgument("temperature must be > 0");
    }
    if (min_cut_fraction < 0.0 || min_cut_fraction > 1.0) {
        throw InvalidArgument("min_cut_fraction must be in [0, 1]");
    }
    if (cuts_per_video < 0) {
        throw InvalidArgument("cuts_per_video must be >= 0");
    }
    if (n_clips < 1 || candidate_stride < 1 || fused_dim < 1 || weighted_dim < 1 || embed_dim < 1) {
        throw InvalidArgument("grid and model dimensions must be positive");
    }
    if (bce_weight < 0.0 || nce_weight < 0.0) {
        throw InvalidArgument("loss weights must be >= 0");
    }
}

GroundingModel init_model(FusionMode mode, const TrackLayout& layout, int fused_dim, int query_dim, int embed_dim,
                          std::uint64_t seed) {
    GroundingModel m;
    if (mode == FusionMode::concat) {
        m.fusion = init_concat_params(layout, fused_dim, derive_seed(seed, 10));
    } else {
        m.fusion = init_weighted_params(layout, fused_dim, derive_seed(seed, 10));
    }
    m.match = init_match_params(fused_dim, query_dim, embed_dim, derive_seed(seed, 11));
    return m;
}

VideoBatch make_batch(const FeatureBundle& bundle, const AnnotationSet& ann, FusionMode mode,
                      const CandidateMask& mask, const TrainConfig& cfg) {
    if (bundle.video_id != ann.video_id) {
        throw InvalidArgument("bundle '" + bundle.video_id + "' paired with annotations for '" + ann.video_id + "'");
    }
    const ClipGrid grid(bundle.duration_s, mask.n_clips());
    VideoBatch b;
    b.duration_s = bundle.duration_s;
    if (mode == FusionMode::concat) {
        b.fusion_input = concat_fusion_input(bundle, grid);
    } else {
        b.fusion_input = weighted_fusion_inputs(bundle, grid);
    }
    const auto& cells = mask.cells();
    const auto n_cells = static_cast<Eigen::Index>(cells.size());
    b.targets.resize(static_cast<Eigen::Index>(ann.queries.size()), n_cells);
    const double span = cfg.iou_scale_max - cfg.iou_scale_min;
    for (std::size_t q = 0; q < ann.queries.size(); ++q) {
        const auto& query = ann.queries[q];
        b.queries.push_back(query.embedding);
        int best = 0;
        double best_iou = -1.0;
        for (Eigen::Index k = 0; k < n_cells; ++k) {
            const Cell c = cells[static_cast<std::size_t>(k)];
            const double iou = temporal_iou(grid.candidate_interval(c.i, c.j), query.gt);
            b.targets(static_cast<Eigen::Index>(q), k) = std::clamp((iou - cfg.iou_scale_min) / span, 0.0, 1.0);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(k);
            }
        }
        b.best_cells.push_back(best);
    }
    return b;
}

LossTerms video_loss(const VideoBatch& batch, const GroundingModel& model, const CandidateMask& mask,
                     const TrainConfig& cfg, GroundingModel* grad) {
    const auto& mp = model.match;
    const Eigen::Index de = mp.embed_dim();
    const auto nq = static_cast<Eigen::Index>(batch.queries.size());
    const auto& cells = mask.cells();
    const auto n_cells = static_cast<Eigen::Index>(cells.size());
    if (nq == 0 || batch.targets.rows() != nq || batch.targets.cols() != n_cells) {
        throw ShapeError("video batch does not match the candidate mask");
    }

    const Eigen::MatrixXd fused = fuse_input(batch, model.fusion);
    const MomentTable moments(fused, mp, mask);
    const Eigen::MatrixXd& m = moments.embeddings();
    const Eigen::VectorXd hm = mp.iou_head.head(de);
    const Eigen::VectorXd hq = mp.iou_head.tail(de);
    const Eigen::VectorXd moment_logit = m * hm;

    Eigen::MatrixXd qe(de, nq);
    Eigen::VectorXd q_norm(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
        const Eigen::VectorXd e = mp.query_projection * batch.queries[static_cast<std::size_t>(q)];
        q_norm[q] = e.norm();
        qe.col(q) = q_norm[q] > 0.0 ? Eigen::VectorXd(e / q_norm[q]) : e;
    }

    LossTerms loss;
    const double bce_scale = cfg.bce_weight / (double(nq) * double(n_cells));
    Eigen::VectorXd d_moment_logit = Eigen::VectorXd::Zero(n_cells);
    Eigen::VectorXd d_query_logit = Eigen::VectorXd::Zero(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
        const double query_logit = hq.dot(qe.col(q)) + mp.iou_bias;
        double sum = 0.0;
        for (Eigen::Index k = 0; k < n_cells; ++k) {
            const double z = moment_logit[k] + query_logit;
            const double y = batch.targets(q, k);
            sum += softplus(z) - y * z;
            const double dz = bce_scale * (sigmoid(z) - y);
            d_moment_logit[k] += dz;
            d_query_logit[q] += dz;
        }
        loss.bce += sum / (double(nq) * double(n_cells));
    }

    // InfoNCE: query a against the best-candidate moments of every query b.
    Eigen::MatrixXd pos(de, nq);
    for (Eigen::Index b = 0; b < nq; ++b) {
        pos.col(b) = m.row(batch.best_cells[static_cast<std::size_t>(b)]).transpose();
    }
    const Eigen::MatrixXd logits = (qe.transpose() * pos) / cfg.temperature;  // nq x nq
    Eigen::MatrixXd d_logits(nq, nq);
    for (Eigen::Index a = 0; a < nq; ++a) {
        const double mx = logits.row(a).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(a).array() - mx).exp().matrix();
        const double lse = mx + std::log(e.sum());
        loss.nce += (lse - logits(a, a)) / double(nq);
        d_logits.row(a) = cfg.nce_weight * (e / e.sum()) / double(nq);
        d_logits(a, a) -= cfg.nce_weight / double(nq);
    }
    loss.total = cfg.bce_weight * loss.bce + cfg.nce_weight * loss.nce;

    if (grad == nullptr) {
        return loss;
    }
    *grad = zeros_like(model);
    auto& g = grad->match;

    // Unit embeddings and head.
    Eigen::MatrixXd dm = d_moment_logit * hm.transpose();  // cells x de
    Eigen::MatrixXd dqe = hq * d_query_logit.transpose();  // de x nq
    g.iou_head.head(de) = m.transpose() * d_moment_logit;
    g.iou_head.tail(de) = qe * d_query_logit;
    g.iou_bias = d_query_logit.sum();

    const Eigen::MatrixXd d_logits_t = d_logits / cfg.temperature;
    dqe += pos * d_logits_t.transpose();
    const Eigen::MatrixXd dpos = qe * d_logits_t;  // de x nq
    for (Eigen::Index b = 0; b < nq; ++b) {
        dm.row(batch.best_cells[static_cast<std::size_t>(b)]) += dpos.col(b).transpose();
    }

    // Query normalization and projection.
    for (Eigen::Index q = 0; q < nq; ++q) {
        if (q_norm[q] == 0.0) {
            continue;
        }
        const Eigen::VectorXd u = qe.col(q);
        const Eigen::VectorXd de_q = (dqe.col(q) - u * u.dot(dqe.col(q))) / q_norm[q];
        g.query_projection += de_q * batch.queries[static_cast<std::size_t>(q)].transpose();
    }

    // Moment normalization, then span means scattered back onto grid rows
    // through a difference array.
    const Eigen::Index n = mask.n_clips();
    Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(n + 1, de);
    const Eigen::VectorXd& norms = moments.mean_norms();
    for (Eigen::Index k = 0; k < n_cells; ++k) {
        if (norms[k] == 0.0) {
            continue;
        }
        const Cell c = cells[static_cast<std::size_t>(k)];
        const auto u = m.row(k);
        const Eigen::RowVectorXd dmean = (dm.row(k) - u * u.dot(dm.row(k))) / (norms[k] * double(c.j - c.i + 1));
        diff.row(c.i) += dmean;
        diff.row(c.j + 1) -= dmean;
    }
    Eigen::MatrixXd d_projected(n, de);
    Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(de);
    for (Eigen::Index r = 0; r < n; ++r) {
        running += diff.row(r);
        d_projected.row(r) = running;
    }
    g.moment_projection = d_projected.transpose() * fused;
    const Eigen::MatrixXd d_fused = d_projected * mp.moment_projection;

    if (const auto* c = std::get_if<ConcatFusionParams>(&model.fusion)) {
        (void)c;
        std::get<ConcatFusionParams>(grad->fusion).projection =
            concat_fuse_grad(std::get<Eigen::MatrixXd>(batch.fusion_input), d_fused);
    } else {
        const auto wg = weighted_fuse_grad(std::get<std::vector<Eigen::MatrixXd>>(batch.fusion_input),
                                           std::get<WeightedFusionParams>(model.fusion), d_fused);
        auto& gw = std::get<WeightedFusionParams>(grad->fusion);
        gw.projections = wg.projections;
        gw.logits = wg.logits;
        gw.gamma = wg.gamma;
    }
    return loss;
}

TrainResult train(const std::vector<TrainingExample>& data, FusionMode mode, const TrainConfig& cfg,
                  const std::optional<GroundingModel>& init) {
    cfg.validate();
    if (data.empty()) {
        throw InvalidArgument("training set is empty");
    }
    const TrackLayout layout = layout_of(*data.front().bundle);
    const int query_dim = static_cast<int>(data.front().annotations->queries.front().embedding.size());
    for (const auto& ex : data) {
        check_layout(*ex.bundle, layout);
        validate_annotations(*ex.annotations);
    }

    TrainResult result;
    if (init) {
        if (mode_of(init->fusion) != mode || layout_of(init->fusion) != layout) {
            throw InvalidArgument("initial model does not match the fusion mode or feature layout");
        }
        result.model = *init;
    } else {
        result.model = init_model(mode, layout, cfg.fusion_dim(mode), query_dim, cfg.embed_dim, cfg.seed);
    }

    const CandidateMask mask = CandidateMask::dense(cfg.n_clips, cfg.candidate_stride);
    std::vector<VideoBatch> full;
    full.reserve(data.size());
    for (const auto& ex : data) {
        full.push_back(make_batch(*ex.bundle, *ex.annotations, mode, mask, cfg));
    }

    std::mt19937_64 rng(derive_seed(cfg.seed, 20));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    GroundingModel grad;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochLog log;
        log.epoch = epoch;
        std::shuffle(order.begin(), order.end(), rng);

        auto step = [&](const VideoBatch& batch) {
            const LossTerms l = video_loss(batch, result.model, mask, cfg, &grad);
            if (!std::isfinite(l.total)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " (bce " +
                                   std::to_string(l.bce) + ", nce " + std::to_string(l.nce) + ")");
            }
            add_scaled(result.model, grad, -cfg.learning_rate);
            log.loss += l.total;
            log.bce += l.bce;
            log.nce += l.nce;
            ++log.steps;
        };

        for (std::size_t v : order) {
            step(full[v]);
            if (!cfg.augmentation) {
                continue;
            }
            const auto& ex = data[v];
            CutConfig cut_cfg;
            cut_cfg.min_len_s = std::max(default_min_cut_len(ex.annotations->duration_s, cfg.n_clips),
                                         cfg.min_cut_fraction * ex.annotations->duration_s);
            for (int c = 0; c < cfg.cuts_per_video; ++c) {
                ++log.cuts_sampled;
                const auto cut = sample_cut(*ex.annotations, rng, cut_cfg);
                if (!cut) {
                    ++log.cut_fallbacks;
                    step(full[v]);
                    continue;
                }
                step(make_batch(slice_bundle(*ex.bundle, *cut), remap(*ex.annotations, *cut), mode, mask, cfg));
            }
        }
        if (log.steps > 0) {
            log.loss /= log.steps;
            log.bce /= log.steps;
            log.nce /= log.steps;
        }
        log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(log);
    }
    return result;
}

Eigen::MatrixXd fuse_bundle(const FeatureBundle& bundle, const ClipGrid& grid, const FusionParams& fusion) {
    if (const auto* c = std::get_if<ConcatFusionParams>(&fusion)) {
        return concat_fuse(bundle, grid, *c);
    }
    return weighted_fuse(bundle, grid, std::get<WeightedFusionParams>(fusion));
}

std::vector<ScoreMap2D> predict(const FeatureBundle& bundle, const AnnotationSet& ann, const GroundingModel& model,
                                const ClipGrid& grid, const CandidateMask& mask) {
    if (bundle.video_id != ann.video_id) {
        throw InvalidArgument("bundle '" + bundle.video_id + "' paired with annotations for '" + ann.video_id + "'");
    }
    if (grid.n_clips() != mask.n_clips()) {
        throw ShapeError("grid and candidate mask disagree on n_clips");
    }
    const Eigen::MatrixXd fused = fuse_bundle(bundle, grid, model.fusion);
    const MomentTable moments(fused, model.match, mask);
    std::vector<ScoreMap2D> out;
    out.reserve(ann.queries.size());
    for (const auto& q : ann.queries) {
        const ScoreMaps maps = score_maps(moments, q.embedding, model.match);
        out.push_back(combine_scores(maps.cons, maps.iou));
    }
    return out;
}

std::string epoch_log_json(const EpochLog& e) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["loss"] = e.loss;
    j["bce"] = e.bce;
    j["nce"] = e.nce;
    j["steps"] = e.steps;
    j["cuts_sampled"] = e.cuts_sampled;
    j["cut_fallbacks"] = e.cut_fallbacks;
    j["wall_ms"] = e.wall_ms;
    return j.dump();
}

}  // namespace mtvg
