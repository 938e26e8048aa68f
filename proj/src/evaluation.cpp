#include "mtvg/evaluation.hpp"

#include "mtvg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace mtvg {

namespace {

std::string threshold_key(double t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", t);
    return buf;
}

}  // namespace

double recall_at_1(const IntervalMap& preds, const IntervalMap& gts, double threshold) {
    if (gts.empty()) {
        throw InvalidArgument("recall needs at least one ground-truth query");
    }
    std::size_t hits = 0;
    for (const auto& [key, gt] : gts) {
        auto it = preds.find(key);
        if (it != preds.end() && temporal_iou(it->second, gt) >= threshold) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(gts.size());
}

EvalReport evaluate(const IntervalMap& preds, const IntervalMap& gts) {
    EvalReport r;
    r.n_queries = gts.size();
    double sum = 0.0;
    for (double t : kRecallThresholds) {
        const double v = recall_at_1(preds, gts, t);
        r.r1_at[t] = v;
        sum += v;
    }
    r.avg = sum / static_cast<double>(kRecallThresholds.size());
    return r;
}

std::string report_to_json(const EvalReport& report, const std::string& name) {
    nlohmann::ordered_json j;
    if (!name.empty()) {
        j["name"] = name;
    }
    j["n_queries"] = report.n_queries;
    nlohmann::ordered_json r1;
    for (const auto& [t, v] : report.r1_at) {
        r1[threshold_key(t)] = v;
    }
    j["r1_at"] = r1;
    j["avg"] = report.avg;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& json, std::string* name) {
    try {
        const auto j = nlohmann::json::parse(json);
        EvalReport r;
        r.n_queries = j.at("n_queries").get<std::size_t>();
        for (double t : kRecallThresholds) {
            r.r1_at[t] = j.at("r1_at").at(threshold_key(t)).get<double>();
        }
        r.avg = j.at("avg").get<double>();
        if (name != nullptr) {
            *name = j.value("name", std::string());
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what(), 0);
    }
}

std::string render_report_table(const std::vector<NamedReport>& rows) {
    std::size_t width = 7;  // "Feature"
    for (const auto& r : rows) {
        width = std::max(width, r.name.size());
    }
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-*s | %7s | %7s | %7s | %7s\n", static_cast<int>(width), "Feature", "R1@0.3",
                  "R1@0.5", "R1@0.7", "AVG");
    out << buf;
    out << std::string(width, '-') << "-+-" << std::string(7, '-') << "-+-" << std::string(7, '-') << "-+-"
        << std::string(7, '-') << "-+-" << std::string(7, '-') << "\n";
    for (const auto& r : rows) {
        auto pct = [&](double t) {
            auto it = r.report.r1_at.find(t);
            return it == r.report.r1_at.end() ? 0.0 : 100.0 * it->second;
        };
        std::snprintf(buf, sizeof(buf), "%-*s | %7.2f | %7.2f | %7.2f | %7.2f\n", static_cast<int>(width),
                      r.name.c_str(), pct(0.3), pct(0.5), pct(0.7), 100.0 * r.report.avg);
        out << buf;
    }
    return out.str();
}

}  // namespace mtvg
