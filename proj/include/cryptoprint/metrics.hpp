// Evaluation kit: confusion metrics over verdict/event joins, detection
// latency summaries, and histogram utilities.
//
// Metric conventions: a metric whose denominator is zero is *undefined* and
// reported as such (JSON null, CSV "undefined") rather than coerced to 0 or
// 1. Per-family rows count that family's true positives and misses, while
// false positives and true negatives come from the shared benign population
// (benign events carry no family); per-family accuracy/precision/fpr
// therefore share the global benign columns, and only recall is purely
// family-local.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptoprint/codec.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"
#include "cryptoprint/verdict.hpp"

namespace cryptoprint::eval {

// --- confusion metrics -------------------------------------------------------

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct MetricSet {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> fpr;
};

inline MetricSet compute_metrics(const ConfusionCounts& counts) {
    MetricSet metrics;
    const auto ratio = [](std::uint64_t num,
                          std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    metrics.accuracy = ratio(counts.tp + counts.tn, counts.total());
    metrics.precision = ratio(counts.tp, counts.tp + counts.fp);
    metrics.recall = ratio(counts.tp, counts.tp + counts.fn);
    metrics.fpr = ratio(counts.fp, counts.fp + counts.tn);
    return metrics;
}

namespace detail {

struct JoinedVerdict {
    const EncryptionEvent* event = nullptr;
    const Verdict* verdict = nullptr;
};

// Joins verdicts to events by event_id. Every verdict must reference a known
// event and every referenced event must carry ground truth.
inline std::vector<JoinedVerdict> join_verdicts(const std::vector<Verdict>& verdicts,
                                                const std::vector<EncryptionEvent>& events) {
    std::map<std::uint64_t, const EncryptionEvent*> by_id;
    for (const auto& event : events) by_id[event.event_id] = &event;
    std::vector<JoinedVerdict> joined;
    joined.reserve(verdicts.size());
    for (const auto& verdict : verdicts) {
        const auto it = by_id.find(verdict.event_id);
        if (it == by_id.end()) {
            throw MalformedRecord("verdict references unknown event_id " +
                                  std::to_string(verdict.event_id));
        }
        if (!it->second->truth.has_value()) {
            throw MissingTruth("event " + std::to_string(verdict.event_id) +
                               " has no ground truth");
        }
        joined.push_back({it->second, &verdict});
    }
    return joined;
}

}  // namespace detail

// Confusion counts over all (verdict, truth) pairs. Events without a verdict
// (e.g. skipped as invalid) do not contribute.
inline ConfusionCounts compute_confusion(const std::vector<Verdict>& verdicts,
                                         const std::vector<EncryptionEvent>& events) {
    ConfusionCounts counts;
    for (const auto& join : detail::join_verdicts(verdicts, events)) {
        const bool truly_malicious = join.event->truth->label == TruthLabel::Malicious;
        const bool flagged = join.verdict->label == TruthLabel::Malicious;
        if (truly_malicious) {
            flagged ? ++counts.tp : ++counts.fn;
        } else {
            flagged ? ++counts.fp : ++counts.tn;
        }
    }
    return counts;
}

// Rows of a per-family metrics report; family "" is the overall row.
struct FamilyMetricsRow {
    std::string family;  // empty = overall
    ConfusionCounts counts;
    MetricSet metrics;
};

struct MetricsReport {
    std::vector<FamilyMetricsRow> rows;  // overall row first, families sorted
};

inline MetricsReport compute_metrics_report(const std::vector<Verdict>& verdicts,
                                            const std::vector<EncryptionEvent>& events) {
    const auto joined = detail::join_verdicts(verdicts, events);
    ConfusionCounts overall;
    std::map<std::string, ConfusionCounts> per_family;
    for (const auto& join : joined) {
        const bool truly_malicious = join.event->truth->label == TruthLabel::Malicious;
        const bool flagged = join.verdict->label == TruthLabel::Malicious;
        if (truly_malicious) {
            auto& fam = per_family[join.event->truth->family];
            if (flagged) {
                ++overall.tp;
                ++fam.tp;
            } else {
                ++overall.fn;
                ++fam.fn;
            }
        } else {
            flagged ? ++overall.fp : ++overall.tn;
        }
    }
    for (auto& [family, counts] : per_family) {
        counts.fp = overall.fp;  // shared benign columns (see header comment)
        counts.tn = overall.tn;
    }
    MetricsReport report;
    report.rows.push_back({"", overall, compute_metrics(overall)});
    for (const auto& [family, counts] : per_family) {
        report.rows.push_back({family, counts, compute_metrics(counts)});
    }
    return report;
}

// --- latency ------------------------------------------------------------------

struct LatencyStats {
    std::uint64_t count = 0;
    double mean_s = 0.0;
    double min_s = 0.0;
    double max_s = 0.0;
};

struct LatencyReport {
    LatencyStats overall;
    std::vector<std::pair<std::string, LatencyStats>> per_family;  // family-sorted
};

namespace detail {

inline LatencyStats summarize_latencies(std::vector<double>& latencies_s) {
    LatencyStats stats;
    stats.count = latencies_s.size();
    if (latencies_s.empty()) return stats;
    std::sort(latencies_s.begin(), latencies_s.end());
    double sum = 0.0;
    for (const auto v : latencies_s) sum += v;
    stats.mean_s = sum / static_cast<double>(latencies_s.size());
    stats.min_s = latencies_s.front();
    stats.max_s = latencies_s.back();
    return stats;
}

}  // namespace detail

// Detection latency (detected_at_ms - created_at_ms, reported in seconds)
// over true positives only, summarized overall and per family.
inline LatencyReport compute_latency_report(const std::vector<Verdict>& verdicts,
                                            const std::vector<EncryptionEvent>& events) {
    std::vector<double> all;
    std::map<std::string, std::vector<double>> by_family;
    for (const auto& join : detail::join_verdicts(verdicts, events)) {
        if (join.event->truth->label != TruthLabel::Malicious) continue;
        if (join.verdict->label != TruthLabel::Malicious) continue;
        const double latency_s =
            static_cast<double>(join.verdict->detected_at_ms - join.event->created_at_ms) /
            1000.0;
        all.push_back(latency_s);
        by_family[join.event->truth->family].push_back(latency_s);
    }
    LatencyReport report;
    report.overall = detail::summarize_latencies(all);
    for (auto& [family, latencies] : by_family) {
        report.per_family.emplace_back(family, detail::summarize_latencies(latencies));
    }
    return report;
}

// --- histograms -----------------------------------------------------------------

struct Histogram {
    std::vector<double> edges;        // n+1 strictly increasing edges
    std::vector<std::uint64_t> counts;  // n bins
    std::uint64_t dropped = 0;          // values outside [edges.front(), edges.back()]
};

// Bins are half-open [e_i, e_{i+1}) except the last, which is closed at the
// top so edges.back() lands in the final bin. Out-of-range values are counted
// in `dropped`, not binned.
inline Histogram compute_histogram(const std::vector<double>& values,
                                   const std::vector<double>& edges) {
    if (edges.size() < 2) throw BadEdges("histogram needs at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            throw BadEdges("histogram edges must be strictly increasing");
        }
    }
    Histogram hist;
    hist.edges = edges;
    hist.counts.assign(edges.size() - 1, 0);
    for (const auto value : values) {
        if (std::isnan(value) || value < edges.front() || value > edges.back()) {
            ++hist.dropped;
            continue;
        }
        const auto it = std::upper_bound(edges.begin(), edges.end(), value);
        auto bin = static_cast<std::size_t>(it - edges.begin());
        bin = bin == 0 ? 0 : bin - 1;  // exact hit on edges.front()
        if (bin >= hist.counts.size()) bin = hist.counts.size() - 1;  // closed last bin
        hist.counts[bin] += 1;
    }
    return hist;
}

// --- serialization ----------------------------------------------------------------

namespace detail {

inline ordered_json optional_to_json(const std::optional<double>& value) {
    if (!value.has_value()) return nullptr;
    return *value;
}

inline std::string format_metric(const std::optional<double>& value, bool as_percent) {
    if (!value.has_value()) return "undefined";
    char buf[64];
    if (as_percent) {
        std::snprintf(buf, sizeof(buf), "%.1f", *value * 100.0);
    } else {
        std::snprintf(buf, sizeof(buf), "%.6f", *value);
    }
    return buf;
}

}  // namespace detail

inline ordered_json metrics_report_to_json(const MetricsReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json entry;
        entry["family"] = row.family.empty() ? "overall" : row.family;
        entry["tp"] = row.counts.tp;
        entry["fp"] = row.counts.fp;
        entry["tn"] = row.counts.tn;
        entry["fn"] = row.counts.fn;
        entry["accuracy"] = detail::optional_to_json(row.metrics.accuracy);
        entry["precision"] = detail::optional_to_json(row.metrics.precision);
        entry["recall"] = detail::optional_to_json(row.metrics.recall);
        entry["fpr"] = detail::optional_to_json(row.metrics.fpr);
        rows.push_back(std::move(entry));
    }
    return ordered_json{{"rows", std::move(rows)}};
}

// CSV with pinned header "family,accuracy,precision,recall,fpr". With
// as_percent the values are percentages at one decimal (table style);
// otherwise raw proportions at six decimals.
inline std::string metrics_report_to_csv(const MetricsReport& report,
                                         bool as_percent = false) {
    std::string csv = "family,accuracy,precision,recall,fpr\n";
    for (const auto& row : report.rows) {
        csv += row.family.empty() ? "overall" : row.family;
        csv += ',' + detail::format_metric(row.metrics.accuracy, as_percent);
        csv += ',' + detail::format_metric(row.metrics.precision, as_percent);
        csv += ',' + detail::format_metric(row.metrics.recall, as_percent);
        csv += ',' + detail::format_metric(row.metrics.fpr, as_percent);
        csv += '\n';
    }
    return csv;
}

inline ordered_json latency_stats_to_json(const LatencyStats& stats) {
    return ordered_json{{"count", stats.count},
                        {"mean_s", stats.mean_s},
                        {"min_s", stats.min_s},
                        {"max_s", stats.max_s}};
}

inline ordered_json latency_report_to_json(const LatencyReport& report) {
    ordered_json families;
    for (const auto& [family, stats] : report.per_family) {
        families[family] = latency_stats_to_json(stats);
    }
    return ordered_json{{"overall", latency_stats_to_json(report.overall)},
                        {"per_family", std::move(families)}};
}

inline ordered_json histogram_to_json(const Histogram& hist) {
    return ordered_json{
        {"edges", hist.edges}, {"counts", hist.counts}, {"dropped", hist.dropped}};
}

}  // namespace cryptoprint::eval
