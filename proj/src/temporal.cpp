#include "mtvg/temporal.hpp"

#include "mtvg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mtvg {

Interval Interval::make(double start_s, double end_s) {
    Interval iv{start_s, end_s};
    if (!is_valid(iv)) {
        throw InvalidArgument("invalid interval [" + std::to_string(start_s) + ", " +
                              std::to_string(end_s) + "]");
    }
    return iv;
}

bool is_valid(const Interval& iv) noexcept {
    return std::isfinite(iv.start_s) && std::isfinite(iv.end_s) && iv.start_s >= 0.0 &&
           iv.end_s > iv.start_s;
}

double temporal_iou(const Interval& a, const Interval& b) noexcept {
    const double inter = std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = std::max(a.end_s, b.end_s) - std::min(a.start_s, b.start_s);
    return inter / uni;
}

ClipGrid::ClipGrid(double duration_s, int n_clips) : duration_s_(duration_s), n_clips_(n_clips) {
    if (!(std::isfinite(duration_s) && duration_s > 0.0)) {
        throw InvalidArgument("clip grid duration must be positive and finite");
    }
    if (n_clips < 1) {
        throw InvalidArgument("clip grid needs at least one clip");
    }
}

double ClipGrid::boundary(int p) const {
    if (p < 0 || p > n_clips_) {
        throw InvalidArgument("grid boundary " + std::to_string(p) + " out of range");
    }
    if (p == n_clips_) {
        return duration_s_;
    }
    return p * clip_len();
}

Interval ClipGrid::clip_interval(int p) const {
    if (p < 0 || p >= n_clips_) {
        throw InvalidArgument("clip index " + std::to_string(p) + " out of range");
    }
    return Interval{boundary(p), boundary(p + 1)};
}

Interval ClipGrid::candidate_interval(int i, int j) const {
    if (i < 0 || j >= n_clips_ || i > j) {
        throw InvalidArgument("invalid candidate (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
    }
    return Interval{boundary(i), boundary(j + 1)};
}

CandidateMask CandidateMask::dense(int n_clips, int stride) {
    if (n_clips < 1) {
        throw InvalidArgument("candidate mask needs at least one clip");
    }
    if (stride < 1) {
        throw InvalidArgument("candidate stride must be >= 1");
    }
    CandidateMask m;
    m.n_ = n_clips;
    m.bits_.assign(static_cast<std::size_t>(n_clips) * n_clips, 0);
    for (int i = 0; i < n_clips; ++i) {
        if (i % stride != 0) {
            continue;
        }
        for (int j = i; j < n_clips; ++j) {
            if ((j + 1) % stride != 0 && j != n_clips - 1) {
                continue;
            }
            m.bits_[static_cast<std::size_t>(i) * n_clips + j] = 1;
            m.cells_.push_back({i, j});
        }
    }
    return m;
}

bool CandidateMask::valid(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
        return false;
    }
    return bits_[static_cast<std::size_t>(i) * n_ + j] != 0;
}

CandidateMask dense_candidates(int n_clips) { return CandidateMask::dense(n_clips, 1); }

ScoreMap2D::ScoreMap2D(CandidateMask mask, MapKind kind)
    : mask_(std::move(mask)),
      kind_(kind),
      values_(Eigen::MatrixXd::Constant(mask_.n_clips(), mask_.n_clips(),
                                        std::numeric_limits<double>::quiet_NaN())) {}

Cell best_candidate(const ScoreMap2D& map) {
    const auto& cells = map.mask().cells();
    if (cells.empty()) {
        throw InvalidArgument("score map has no valid candidates");
    }
    // cells() is lexicographic, so a strict comparison keeps the earliest tie.
    Cell best = cells.front();
    double best_score = map.at(best.i, best.j);
    for (const Cell& c : cells) {
        const double s = map.at(c.i, c.j);
        if (s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

}  // namespace mtvg
