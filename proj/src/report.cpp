#include "crosslight/report.hpp"

#include <cmath>

namespace crosslight {

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

nlohmann::json pair_json(const Pair& p) { return nlohmann::json::array({p[0], p[1]}); }

}  // namespace

nlohmann::json metrics_to_json(const MetricsReport& m) {
    return {
        {"target_pair", m.target_pair + 1},
        {"detection_latency_s", opt(m.detection_latency_s)},
        {"detection_time_s", opt(m.detection_time_s)},
        {"false_positive_rate", m.false_positive_rate},
        {"benign_cycles", m.benign_cycles},
        {"alarmed_benign_cycles", m.alarmed_benign_cycles},
        {"peak_queue", m.peak_queue},
        {"steady_state_queue", m.steady_state_queue},
        {"queue_at_end", m.queue_at_end},
        {"queue_at_detection", opt(m.queue_at_detection)},
        {"peak_queue_after_detection", opt(m.peak_queue_after_detection)},
        {"green_time_at_end", m.green_time_at_end},
        {"occupancy_saturation_time", opt(m.occupancy_saturation_time)},
    };
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
    MetricsReport m;
    m.target_pair = j.at("target_pair").get<int>() - 1;
    m.detection_latency_s = opt_from(j, "detection_latency_s");
    m.detection_time_s = opt_from(j, "detection_time_s");
    m.false_positive_rate = j.at("false_positive_rate").get<double>();
    m.benign_cycles = j.at("benign_cycles").get<int>();
    m.alarmed_benign_cycles = j.at("alarmed_benign_cycles").get<int>();
    m.peak_queue = j.at("peak_queue").get<double>();
    m.steady_state_queue = j.at("steady_state_queue").get<double>();
    m.queue_at_end = j.at("queue_at_end").get<double>();
    m.queue_at_detection = opt_from(j, "queue_at_detection");
    m.peak_queue_after_detection = opt_from(j, "peak_queue_after_detection");
    m.green_time_at_end = j.at("green_time_at_end").get<double>();
    m.occupancy_saturation_time = opt_from(j, "occupancy_saturation_time");
    return m;
}

nlohmann::json run_report(const MetricsReport& m, const RunInfo& info) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "run";
    j["seed"] = info.seed;
    j["metrics"] = metrics_to_json(m);
    j["residual_tol"] = std::isfinite(info.residual_tol) ? nlohmann::json(info.residual_tol) : nlohmann::json(nullptr);
    j["thresholds"] = info.thresholds ? pair_json(*info.thresholds) : nlohmann::json(nullptr);
    j["noise_sd"] = {{"process", pair_json(info.noise.process_sd)}, {"measurement", pair_json(info.noise.meas_sd)}};
    return j;
}

nlohmann::json sweep_report(const std::vector<SweepEntry>& entries) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "sweep";
    j["items"] = nlohmann::json::array();

    struct Agg {
        int runs = 0, ok = 0, detected = 0;
        double fpr_sum = 0.0, latency_sum = 0.0;
    };
    std::vector<std::string> order;
    std::map<std::string, Agg> aggs;

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const SweepEntry& e = entries[i];
        nlohmann::json item = {{"index", i}, {"label", e.label}, {"seed", e.seed}};
        if (e.item.ok) {
            item["status"] = "ok";
            item["metrics"] = metrics_to_json(e.item.metrics);
        } else {
            item["status"] = e.item.numeric_fault ? "numeric_fault" : "failed";
            item["error"] = e.item.error;
        }
        j["items"].push_back(item);

        if (!aggs.count(e.label)) order.push_back(e.label);
        Agg& a = aggs[e.label];
        ++a.runs;
        if (!e.item.ok) continue;
        ++a.ok;
        a.fpr_sum += e.item.metrics.false_positive_rate;
        if (e.item.metrics.detection_latency_s) {
            ++a.detected;
            a.latency_sum += *e.item.metrics.detection_latency_s;
        }
    }
    j["aggregates"] = nlohmann::json::array();
    for (const auto& label : order) {
        const Agg& a = aggs[label];
        nlohmann::json g = {{"label", label}, {"runs", a.runs}, {"ok", a.ok}, {"detected", a.detected}};
        g["detection_rate"] = a.ok ? nlohmann::json(static_cast<double>(a.detected) / a.ok) : nlohmann::json(nullptr);
        g["mean_false_positive_rate"] = a.ok ? nlohmann::json(a.fpr_sum / a.ok) : nlohmann::json(nullptr);
        g["mean_detection_latency_s"] =
            a.detected ? nlohmann::json(a.latency_sum / a.detected) : nlohmann::json(nullptr);
        j["aggregates"].push_back(g);
    }
    return j;
}

std::string dump_report(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace crosslight
