#include "mtvg/feature_io.hpp"

#include "mtvg/binary_io.hpp"
#include "mtvg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>

namespace mtvg {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'F', 'B'};
constexpr std::uint32_t kVersion = 1;

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::vector<char> encode_bundle(const FeatureBundle& bundle) {
    ByteWriter w;
    w.bytes(std::string_view(kMagic, 4));
    w.u32(kVersion);
    w.str(bundle.video_id);
    w.f64(bundle.duration_s);
    w.u32(static_cast<std::uint32_t>(bundle.tracks.size()));
    for (const auto& t : bundle.tracks) {
        w.str(t.extractor_id);
        w.u32(static_cast<std::uint32_t>(t.data.rows()));
        w.u32(static_cast<std::uint32_t>(t.data.cols()));
        const float* p = t.data.data();
        for (Eigen::Index k = 0; k < t.data.size(); ++k) {
            w.f32(p[k]);
        }
    }
    return w.buffer();
}

FeatureBundle decode_bundle(std::span<const char> bytes, BundleDiagnostics* diag) {
    ByteReader r(bytes);
    if (r.bytes(4, "magic") != std::string_view(kMagic, 4)) {
        throw ParseError("bad magic, expected MGFB", 0);
    }
    const std::size_t version_at = r.offset();
    if (r.u32("version") != kVersion) {
        throw ParseError("unsupported MGFB version", version_at);
    }
    FeatureBundle b;
    b.video_id = r.str("video_id");
    const std::size_t duration_at = r.offset();
    b.duration_s = r.f64("duration_s");
    if (!(std::isfinite(b.duration_s) && b.duration_s > 0.0)) {
        throw ParseError("duration must be positive and finite", duration_at);
    }
    const std::uint32_t n_tracks = r.u32("track count");
    if (n_tracks == 0) {
        throw ParseError("bundle has no tracks", r.offset() - 4);
    }
    for (std::uint32_t k = 0; k < n_tracks; ++k) {
        FeatureTrack t;
        t.extractor_id = r.str("extractor_id");
        const std::size_t dims_at = r.offset();
        const std::uint32_t rows = r.u32("track rows");
        const std::uint32_t cols = r.u32("track dim");
        if (rows == 0 || cols == 0) {
            throw ParseError("track '" + t.extractor_id + "' has a zero dimension", dims_at);
        }
        const std::size_t payload_at = r.offset();
        const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
        if (n > (bytes.size() - payload_at) / sizeof(float)) {
            throw ParseError("truncated payload for track '" + t.extractor_id + "'", payload_at);
        }
        t.data.resize(rows, cols);
        float* p = t.data.data();
        for (std::uint64_t e = 0; e < n; ++e) {
            const std::size_t at = r.offset();
            p[e] = r.f32("feature value");
            if (!std::isfinite(p[e])) {
                throw ParseError("non-finite feature value in track '" + t.extractor_id + "'", at);
            }
        }
        b.tracks.push_back(std::move(t));
    }
    if (!r.at_end()) {
        throw ParseError("trailing bytes after last track", r.offset());
    }

    int min_rows = std::numeric_limits<int>::max();
    for (const auto& t : b.tracks) {
        min_rows = std::min(min_rows, t.rows());
    }
    int warnings = 0;
    for (auto& t : b.tracks) {
        if (t.rows() > min_rows) {
            t.data.conservativeResize(min_rows, Eigen::NoChange);
            ++warnings;
        }
    }
    if (diag != nullptr) {
        diag->truncation_warnings = warnings;
    }
    return b;
}

void save_bundle(const FeatureBundle& bundle, const std::filesystem::path& path) {
    validate_bundle(bundle);
    write_file_atomic(path, encode_bundle(bundle));
}

FeatureBundle load_bundle(const std::filesystem::path& path, BundleDiagnostics* diag) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_bundle(bytes, diag);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
}

void validate_bundle(const FeatureBundle& bundle) {
    if (bundle.tracks.empty()) {
        throw InvalidArgument("bundle '" + bundle.video_id + "' has no tracks");
    }
    if (!(std::isfinite(bundle.duration_s) && bundle.duration_s > 0.0)) {
        throw InvalidArgument("bundle '" + bundle.video_id + "' has a non-positive duration");
    }
    const int rows = bundle.tracks.front().rows();
    for (const auto& t : bundle.tracks) {
        if (t.rows() < 1 || t.dim() < 1) {
            throw InvalidArgument("track '" + t.extractor_id + "' is empty");
        }
        if (t.rows() != rows) {
            throw ShapeError("tracks of bundle '" + bundle.video_id + "' disagree on row count");
        }
        if (!t.data.allFinite()) {
            throw InvalidArgument("track '" + t.extractor_id + "' has non-finite values");
        }
    }
}

Eigen::MatrixXd pool_to_grid(const Eigen::Ref<const Eigen::MatrixXd>& rows, int n_clips) {
    if (n_clips < 1) {
        throw InvalidArgument("pooling needs at least one clip");
    }
    const long long T = rows.rows();
    if (T < 1) {
        throw InvalidArgument("cannot pool an empty track");
    }
    const long long n = n_clips;
    Eigen::MatrixXd out(n_clips, rows.cols());
    for (long long p = 0; p < n; ++p) {
        // Rows with floor(t*n/T) == p are exactly [ceil(p*T/n), ceil((p+1)*T/n)).
        const long long lo = (p * T + n - 1) / n;
        const long long hi = ((p + 1) * T + n - 1) / n;
        if (hi > lo) {
            out.row(p) = rows.middleRows(lo, hi - lo).colwise().mean();
        } else {
            const long long nearest = std::min(T - 1, ((2 * p + 1) * T) / (2 * n));
            out.row(p) = rows.row(nearest);
        }
    }
    return out;
}

Eigen::MatrixXd pool_to_grid(const FeatureTrack& track, const ClipGrid& grid) {
    return pool_to_grid(track.data.cast<double>(), grid.n_clips());
}

Eigen::VectorXd embed_text(std::string_view text, int dim) {
    if (dim < 1) {
        throw InvalidArgument("embedding dimension must be positive");
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    std::string token;
    auto flush = [&] {
        if (token.empty()) {
            return;
        }
        const std::uint64_t h = fnv1a(token);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += sign;
        token.clear();
    };
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) != 0) {
            token.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
    }
    flush();
    const double norm = v.norm();
    if (norm > 0.0) {
        v /= norm;
    }
    return v;
}

std::string annotations_to_json(const AnnotationSet& ann) {
    nlohmann::json j;
    j["video_id"] = ann.video_id;
    j["duration_s"] = ann.duration_s;
    j["queries"] = nlohmann::json::array();
    for (const auto& q : ann.queries) {
        nlohmann::json jq;
        jq["query_id"] = q.query_id;
        if (!q.text.empty()) {
            jq["text"] = q.text;
        }
        jq["embedding"] = std::vector<double>(q.embedding.data(), q.embedding.data() + q.embedding.size());
        jq["start_s"] = q.gt.start_s;
        jq["end_s"] = q.gt.end_s;
        j["queries"].push_back(std::move(jq));
    }
    return j.dump(1) + "\n";
}

AnnotationSet annotations_from_json(std::string_view json, int embedding_dim) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("annotation JSON: ") + e.what(), e.byte);
    }
    AnnotationSet ann;
    try {
        ann.video_id = j.at("video_id").get<std::string>();
        ann.duration_s = j.at("duration_s").get<double>();
        std::size_t record = 0;
        for (const auto& jq : j.at("queries")) {
            ++record;
            QueryAnnotation q;
            q.query_id = jq.at("query_id").get<std::string>();
            if (jq.contains("text")) {
                q.text = jq["text"].get<std::string>();
            }
            if (jq.contains("embedding")) {
                const auto values = jq["embedding"].get<std::vector<double>>();
                q.embedding = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
            } else if (!q.text.empty() && embedding_dim > 0) {
                q.embedding = embed_text(q.text, embedding_dim);
            } else {
                throw ParseError("query '" + q.query_id + "' has neither embedding nor text", record);
            }
            q.gt = Interval{jq.at("start_s").get<double>(), jq.at("end_s").get<double>()};
            ann.queries.push_back(std::move(q));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("annotation schema: ") + e.what(), 0);
    }
    validate_annotations(ann);
    return ann;
}

void save_annotations(const AnnotationSet& ann, const std::filesystem::path& path) {
    validate_annotations(ann);
    write_text_atomic(path, annotations_to_json(ann));
}

AnnotationSet load_annotations(const std::filesystem::path& path, int embedding_dim) {
    const auto bytes = read_file_bytes(path);
    try {
        return annotations_from_json(std::string_view(bytes.data(), bytes.size()), embedding_dim);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
}

void validate_annotations(const AnnotationSet& ann) {
    if (!(std::isfinite(ann.duration_s) && ann.duration_s > 0.0)) {
        throw InvalidArgument("annotations for '" + ann.video_id + "' have a non-positive duration");
    }
    if (ann.queries.empty()) {
        throw InvalidArgument("annotations for '" + ann.video_id + "' have no queries");
    }
    const Eigen::Index dim = ann.queries.front().embedding.size();
    for (const auto& q : ann.queries) {
        if (!is_valid(q.gt) || q.gt.end_s > ann.duration_s) {
            throw InvalidArgument("query '" + q.query_id + "' has a GT outside [0, duration]");
        }
        if (q.embedding.size() != dim || dim == 0) {
            throw ShapeError("query '" + q.query_id + "' has an inconsistent embedding size");
        }
        if (!q.embedding.allFinite() || q.embedding.squaredNorm() == 0.0) {
            throw InvalidArgument("query '" + q.query_id + "' has a zero or non-finite embedding");
        }
    }
}

}  // namespace mtvg
