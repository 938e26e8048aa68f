#pragma once

#include "mtvg/temporal.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mtvg {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-second features from one extractor: row t covers second [t, t+1).
struct FeatureTrack {
    std::string extractor_id;
    FeatureMatrix data;  // T x D

    int rows() const noexcept { return static_cast<int>(data.rows()); }
    int dim() const noexcept { return static_cast<int>(data.cols()); }
};

/// All tracks of one video. Track order is the canonical feature order used by fusion.
struct FeatureBundle {
    std::string video_id;
    double duration_s = 0.0;
    std::vector<FeatureTrack> tracks;

    int rows() const noexcept { return tracks.empty() ? 0 : tracks.front().rows(); }
};

struct QueryAnnotation {
    std::string query_id;
    std::string text;
    Eigen::VectorXd embedding;
    Interval gt;
};

struct AnnotationSet {
    std::string video_id;
    double duration_s = 0.0;
    std::vector<QueryAnnotation> queries;
};

struct BundleDiagnostics {
    int truncation_warnings = 0;
};

// Feature container ("MGFB", little-endian):
//   magic "MGFB" | version u32 = 1 | video_id (u32 len + UTF-8) | duration_s f64 |
//   track count u32 | per track: extractor_id (u32 len + UTF-8) | T u32 | D u32 |
//   T*D f32 row-major
std::vector<char> encode_bundle(const FeatureBundle& bundle);
FeatureBundle decode_bundle(std::span<const char> bytes, BundleDiagnostics* diag = nullptr);

void save_bundle(const FeatureBundle& bundle, const std::filesystem::path& path);
/// Validates the container. Tracks whose row counts disagree are truncated to
/// the shortest one and each truncated track adds one warning.
FeatureBundle load_bundle(const std::filesystem::path& path, BundleDiagnostics* diag = nullptr);

/// Throws on empty tracks, non-finite values or disagreeing row counts.
void validate_bundle(const FeatureBundle& bundle);

/// Segment mean of rows onto `n_clips` pieces. Row t lands in piece
/// floor(t * n / T). Pieces that receive no row (T < n) copy the source row
/// nearest to the piece centre.
Eigen::MatrixXd pool_to_grid(const Eigen::Ref<const Eigen::MatrixXd>& rows, int n_clips);
Eigen::MatrixXd pool_to_grid(const FeatureTrack& track, const ClipGrid& grid);

/// Signed hashed bag-of-tokens, L2-normalized. Tokens are lower-cased
/// alphanumeric runs. Returns the zero vector for text without tokens.
Eigen::VectorXd embed_text(std::string_view text, int dim);

std::string annotations_to_json(const AnnotationSet& ann);
/// `embedding_dim` is used to embed queries that carry only `text`.
AnnotationSet annotations_from_json(std::string_view json, int embedding_dim = 0);

void save_annotations(const AnnotationSet& ann, const std::filesystem::path& path);
AnnotationSet load_annotations(const std::filesystem::path& path, int embedding_dim = 0);

/// Throws unless every GT lies in [0, duration], embeddings are finite,
/// non-zero and share one dimension, and there is at least one query.
void validate_annotations(const AnnotationSet& ann);

}  // namespace mtvg
