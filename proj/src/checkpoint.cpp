#include "mtvg/checkpoint.hpp"

#include "mtvg/errors.hpp"

#include <cmath>

namespace mtvg {

namespace {

constexpr const char* kTrackPrefix = "fusion.track.";

}  // namespace

TensorArchive model_to_archive(const GroundingModel& model) {
    TensorArchive a;
    const bool concat = mode_of(model.fusion) == FusionMode::concat;
    a.put_scalar("fusion.mode", concat ? 0.0 : 1.0);
    const auto& layout = layout_of(model.fusion);
    for (std::size_t k = 0; k < layout.size(); ++k) {
        a.put_scalar(kTrackPrefix + std::to_string(k) + "." + layout[k].extractor_id, layout[k].dim);
    }
    if (concat) {
        a.put_matrix("fusion.concat.projection", std::get<ConcatFusionParams>(model.fusion).projection);
    } else {
        const auto& w = std::get<WeightedFusionParams>(model.fusion);
        for (std::size_t k = 0; k < w.projections.size(); ++k) {
            a.put_matrix("fusion.weighted.projection." + std::to_string(k), w.projections[k]);
        }
        a.put_vector("fusion.weighted.logits", w.logits);
        a.put_scalar("fusion.weighted.gamma", w.gamma);
    }
    a.put_matrix("match.moment_projection", model.match.moment_projection);
    a.put_matrix("match.query_projection", model.match.query_projection);
    a.put_vector("match.iou_head", model.match.iou_head);
    a.put_scalar("match.iou_bias", model.match.iou_bias);
    return a;
}

GroundingModel model_from_archive(const TensorArchive& archive) {
    TrackLayout layout;
    for (std::size_t k = 0;; ++k) {
        const std::string prefix = kTrackPrefix + std::to_string(k) + ".";
        const NamedTensor* found = nullptr;
        for (const auto& t : archive.tensors()) {
            if (t.name.rfind(prefix, 0) == 0) {
                found = &t;
                break;
            }
        }
        if (found == nullptr) {
            break;
        }
        if (found->data.size() != 1) {
            throw ShapeError("checkpoint track entry '" + found->name + "' is not a scalar");
        }
        layout.push_back({found->name.substr(prefix.size()), static_cast<int>(found->data[0])});
    }
    if (layout.empty()) {
        throw Error("checkpoint has no feature layout");
    }

    GroundingModel m;
    const double mode = archive.scalar("fusion.mode");
    if (mode == 0.0) {
        ConcatFusionParams c;
        c.layout = layout;
        c.projection = archive.matrix("fusion.concat.projection");
        if (c.projection.cols() != c.input_dim()) {
            throw ShapeError("checkpoint concat projection does not match its feature layout");
        }
        m.fusion = std::move(c);
    } else if (mode == 1.0) {
        WeightedFusionParams w;
        w.layout = layout;
        for (std::size_t k = 0; k < layout.size(); ++k) {
            w.projections.push_back(archive.matrix("fusion.weighted.projection." + std::to_string(k)));
            if (w.projections.back().cols() != layout[k].dim) {
                throw ShapeError("checkpoint weighted projection " + std::to_string(k) + " does not match its track");
            }
        }
        w.logits = archive.vector("fusion.weighted.logits");
        w.gamma = archive.scalar("fusion.weighted.gamma");
        if (static_cast<std::size_t>(w.logits.size()) != layout.size()) {
            throw ShapeError("checkpoint logits do not match the feature layout");
        }
        m.fusion = std::move(w);
    } else {
        throw Error("checkpoint has an unknown fusion mode");
    }
    m.match.moment_projection = archive.matrix("match.moment_projection");
    m.match.query_projection = archive.matrix("match.query_projection");
    m.match.iou_head = archive.vector("match.iou_head");
    m.match.iou_bias = archive.scalar("match.iou_bias");
    if (m.match.fused_dim() != fused_dim(m.fusion) || m.match.query_projection.rows() != m.match.embed_dim() ||
        m.match.iou_head.size() != 2 * m.match.embed_dim()) {
        throw ShapeError("checkpoint scorer shapes are inconsistent");
    }
    return m;
}

void save_model(const GroundingModel& model, const std::filesystem::path& path) {
    model_to_archive(model).save(path);
}

GroundingModel load_model(const std::filesystem::path& path) { return model_from_archive(TensorArchive::load(path)); }

}  // namespace mtvg
