#pragma once

#include "mtvg/temporal.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace mtvg {

inline constexpr std::array<double, 3> kRecallThresholds{0.3, 0.5, 0.7};

/// Keyed by query identity (callers usually use "video_id/query_id").
using IntervalMap = std::map<std::string, Interval>;

struct EvalReport {
    std::map<double, double> r1_at;
    double avg = 0.0;
    std::size_t n_queries = 0;
};

/// Fraction of GT queries whose prediction reaches IoU >= threshold. A
/// missing prediction is a miss.
double recall_at_1(const IntervalMap& preds, const IntervalMap& gts, double threshold);

/// R1 at 0.3 / 0.5 / 0.7 plus their mean.
EvalReport evaluate(const IntervalMap& preds, const IntervalMap& gts);

std::string report_to_json(const EvalReport& report, const std::string& name = {});
EvalReport report_from_json(const std::string& json, std::string* name = nullptr);

struct NamedReport {
    std::string name;
    EvalReport report;
};

/// Fixed-width table of percentages: name | R1@0.3 | R1@0.5 | R1@0.7 | AVG.
std::string render_report_table(const std::vector<NamedReport>& rows);

}  // namespace mtvg
