#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mtvg {

/// A closed time span in seconds. Construct through `Interval::make` to get
/// validation; aggregate initialization is allowed for trusted call sites.
struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;

    /// Throws InvalidArgument unless start >= 0, end > start and both finite.
    static Interval make(double start_s, double end_s);

    double length() const noexcept { return end_s - start_s; }
    bool contains(const Interval& other) const noexcept {
        return start_s <= other.start_s && other.end_s <= end_s;
    }
    /// True when t lies strictly inside (start, end).
    bool interior_contains(double t) const noexcept { return start_s < t && t < end_s; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

bool is_valid(const Interval& iv) noexcept;

/// |a ∩ b| / |a ∪ b|. Symmetric, 0 for disjoint or touching intervals.
double temporal_iou(const Interval& a, const Interval& b) noexcept;

/// Fixed partition of a video into `n_clips` equal pieces.
class ClipGrid {
public:
    ClipGrid(double duration_s, int n_clips = 128);

    double duration_s() const noexcept { return duration_s_; }
    int n_clips() const noexcept { return n_clips_; }
    double clip_len() const noexcept { return duration_s_ / n_clips_; }

    /// Time of grid boundary p in [0, n_clips]; boundary n_clips is the duration exactly.
    double boundary(int p) const;
    Interval clip_interval(int p) const;
    /// Span of clips i..j inclusive.
    Interval candidate_interval(int i, int j) const;

private:
    double duration_s_;
    int n_clips_;
};

struct Cell {
    int i = 0;
    int j = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Valid (start clip, end clip) pairs of a 2D temporal map.
class CandidateMask {
public:
    CandidateMask() = default;

    /// Upper triangle i <= j. With stride s > 1 only spans that start on a
    /// multiple of s and end on a multiple of s (or on the last clip) are kept.
    static CandidateMask dense(int n_clips, int stride = 1);

    int n_clips() const noexcept { return n_; }
    std::size_t count() const noexcept { return cells_.size(); }
    bool valid(int i, int j) const;
    /// Valid cells in lexicographic (i, j) order.
    const std::vector<Cell>& cells() const noexcept { return cells_; }

    friend bool operator==(const CandidateMask& a, const CandidateMask& b) {
        return a.n_ == b.n_ && a.bits_ == b.bits_;
    }

private:
    int n_ = 0;
    std::vector<std::uint8_t> bits_;
    std::vector<Cell> cells_;
};

CandidateMask dense_candidates(int n_clips);

enum class MapKind { cons, iou, combined, aggregate };

/// N x N score map over moment candidates. Invalid cells hold NaN and are never read.
class ScoreMap2D {
public:
    ScoreMap2D() = default;
    ScoreMap2D(CandidateMask mask, MapKind kind);

    int n_clips() const noexcept { return mask_.n_clips(); }
    const CandidateMask& mask() const noexcept { return mask_; }
    MapKind kind() const noexcept { return kind_; }

    double at(int i, int j) const { return values_(i, j); }
    void set(int i, int j, double v) { values_(i, j) = v; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }

private:
    CandidateMask mask_;
    MapKind kind_ = MapKind::combined;
    Eigen::MatrixXd values_;
};

/// Argmax over valid cells; ties go to the smaller i, then the smaller j.
Cell best_candidate(const ScoreMap2D& map);

}  // namespace mtvg
