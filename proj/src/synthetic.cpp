#include "mtvg/synthetic.hpp"

#include "mtvg/errors.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace mtvg {

namespace {

int track_dim(const SyntheticSpec& spec, int k) {
    return spec.dims.size() == 1 ? spec.dims.front() : spec.dims.at(static_cast<std::size_t>(k));
}

double track_gain(const SyntheticSpec& spec, int k) {
    return spec.track_gain.empty() ? 1.0 : spec.track_gain.at(static_cast<std::size_t>(k));
}

void check_spec(const SyntheticSpec& spec) {
    if (spec.n_videos < 1 || spec.n_tracks < 1 || spec.queries_per_video < 1 || spec.query_dim < 1) {
        throw InvalidArgument("synthetic spec counts must be positive");
    }
    if (spec.dims.size() != 1 && static_cast<int>(spec.dims.size()) != spec.n_tracks) {
        throw InvalidArgument("synthetic spec needs one dim or one per track");
    }
    for (int d : spec.dims) {
        if (d < 1) {
            throw InvalidArgument("synthetic track dims must be positive");
        }
    }
    if (!spec.track_gain.empty() && static_cast<int>(spec.track_gain.size()) != spec.n_tracks) {
        throw InvalidArgument("track_gain needs one entry per track");
    }
    if (spec.signal_strength < 0.0 || spec.noise_sigma <= 0.0) {
        throw InvalidArgument("signal_strength must be >= 0 and noise_sigma > 0");
    }
    if (spec.min_duration_s < 1 || spec.max_duration_s < spec.min_duration_s) {
        throw InvalidArgument("bad synthetic duration range");
    }
    if (!(spec.min_moment_s > 0.0) || spec.max_moment_s < spec.min_moment_s) {
        throw InvalidArgument("bad synthetic moment length range");
    }
    if (spec.split_query && spec.query_dim < spec.n_tracks) {
        throw InvalidArgument("split_query needs query_dim >= n_tracks");
    }
    if (spec.drift < 0.0) {
        throw InvalidArgument("drift must be >= 0");
    }
    if (spec.shared_query_component < 0.0 || spec.shared_query_component >= 1.0) {
        throw InvalidArgument("shared_query_component must be in [0, 1)");
    }
}

std::string numbered(const char* prefix, int k, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, k);
    return buf;
}

}  // namespace

SyntheticDataset generate_synthetic_dataset(std::uint64_t seed, const SyntheticSpec& spec) {
    check_spec(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SyntheticDataset out;
    const int dq = spec.query_dim;
    // Track k sees query columns [lo, hi); all of them unless split_query.
    auto random_map = [&](int k) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(track_dim(spec, k), dq);
        const int lo = spec.split_query ? k * dq / spec.n_tracks : 0;
        const int hi = spec.split_query ? (k + 1) * dq / spec.n_tracks : dq;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (int c = lo; c < hi; ++c) {
                m(r, c) = normal(rng);
            }
        }
        return m;
    };
    for (int k = 0; k < spec.n_tracks; ++k) {
        out.track_maps.push_back(random_map(k));
    }
    for (int k = 0; k < spec.n_tracks; ++k) {
        out.drift_maps.push_back(random_map(k));
    }
    Eigen::VectorXd shared(dq);
    for (int c = 0; c < dq; ++c) {
        shared[c] = normal(rng);
    }
    shared.normalize();

    for (int v = 0; v < spec.n_videos; ++v) {
        const std::string video_id = numbered("vid", v, 4);
        const int T = std::uniform_int_distribution<int>(spec.min_duration_s, spec.max_duration_s)(rng);
        const double duration = T;

        // Disjoint moments separated by random gaps.
        const int nq = spec.queries_per_video;
        std::vector<double> lengths(nq);
        double total = 0.0;
        for (auto& len : lengths) {
            len = spec.min_moment_s + unit(rng) * (spec.max_moment_s - spec.min_moment_s);
            total += len;
        }
        if (total > 0.9 * duration) {
            const double shrink = 0.9 * duration / total;
            for (auto& len : lengths) {
                len *= shrink;
            }
            total *= shrink;
        }
        std::vector<double> gaps(nq + 1);
        double gap_sum = 0.0;
        for (auto& g : gaps) {
            g = -std::log(1.0 - unit(rng));
            gap_sum += g;
        }
        const double free_time = duration - total;

        AnnotationSet ann;
        ann.video_id = video_id;
        ann.duration_s = duration;
        double cursor = 0.0;
        for (int q = 0; q < nq; ++q) {
            cursor += free_time * gaps[q] / gap_sum;
            QueryAnnotation qa;
            qa.query_id = numbered("q", q, 2);
            const double end = std::min(duration, cursor + lengths[q]);
            qa.gt = Interval{cursor, end};
            cursor = end;
            Eigen::VectorXd z(dq);
            for (int c = 0; c < dq; ++c) {
                z[c] = normal(rng);
            }
            z.normalize();
            const double w = spec.shared_query_component;
            qa.embedding = (std::sqrt(w) * shared + std::sqrt(1.0 - w) * z).normalized();
            ann.queries.push_back(std::move(qa));
        }

        FeatureBundle bundle;
        bundle.video_id = video_id;
        bundle.duration_s = duration;
        for (int k = 0; k < spec.n_tracks; ++k) {
            const int d = track_dim(spec, k);
            Eigen::MatrixXd x(T, d);
            for (int t = 0; t < T; ++t) {
                for (int c = 0; c < d; ++c) {
                    x(t, c) = spec.noise_sigma * normal(rng);
                }
            }
            for (const auto& q : ann.queries) {
                for (int t = 0; t < T; ++t) {
                    const double centre = t + 0.5;
                    if (centre >= q.gt.start_s && centre < q.gt.end_s) {
                        const double phase = 2.0 * (centre - q.gt.start_s) / q.gt.length() - 1.0;
                        x.row(t) += planted_pattern(out, spec, k, q.embedding, phase).transpose();
                    }
                }
            }
            bundle.tracks.push_back({numbered("feat", k, 1), x.cast<float>()});
        }
        out.bundles.push_back(std::move(bundle));
        out.annotations.push_back(std::move(ann));
    }
    return out;
}

Eigen::VectorXd planted_pattern(const SyntheticDataset& data, const SyntheticSpec& spec, int track,
                                const Eigen::VectorXd& query_embedding, double phase) {
    const auto k = static_cast<std::size_t>(track);
    Eigen::VectorXd p = data.track_maps.at(k) * query_embedding;
    const double norm = p.norm();
    if (norm == 0.0) {
        return p;
    }
    p /= norm;
    if (spec.drift != 0.0 && phase != 0.0) {
        const Eigen::VectorXd b = data.drift_maps.at(k) * query_embedding;
        const double b_norm = b.norm();
        if (b_norm > 0.0) {
            p += (spec.drift * phase / b_norm) * b;
        }
    }
    return (spec.signal_strength * track_gain(spec, track) * spec.noise_sigma) * p;
}

}  // namespace mtvg
