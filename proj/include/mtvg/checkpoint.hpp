#pragma once

#include "mtvg/tensor_archive.hpp"
#include "mtvg/trainer.hpp"

#include <filesystem>

namespace mtvg {

// Tensor names inside an MGPC model checkpoint:
//   fusion.mode                      {1}    0 = concat, 1 = weighted
//   fusion.track.<k>.<extractor_id>  {1}    feature dim of track k
//   fusion.concat.projection         {d_out, sum D_k}
//   fusion.weighted.projection.<k>   {d_c, D_k}
//   fusion.weighted.logits           {K}
//   fusion.weighted.gamma            {1}
//   match.moment_projection          {d_e, d_f}
//   match.query_projection           {d_e, Dq}
//   match.iou_head                   {2 d_e}
//   match.iou_bias                   {1}
TensorArchive model_to_archive(const GroundingModel& model);
GroundingModel model_from_archive(const TensorArchive& archive);

void save_model(const GroundingModel& model, const std::filesystem::path& path);
GroundingModel load_model(const std::filesystem::path& path);

}  // namespace mtvg
