// Experiment harness: canned end-to-end studies over the synthetic scenario
// presets, aggregated across seeds (mean and population standard deviation).
//
// Every experiment follows the same pipeline per seed: generate a scenario,
// fit the baseline model on the first 30% of benign events (in arrival
// order, windowed exactly like detection), then run detection over all
// events arriving after that warmup and score the outcome. Reports carry one
// row per sweep point (or per family / file type) and serialize to JSON and
// CSV. The scaling experiment reports wall-clock timings, which are the one
// intentionally non-reproducible quantity in any report.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cryptoprint/codec.hpp"
#include "cryptoprint/detector.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"
#include "cryptoprint/features.hpp"
#include "cryptoprint/footprint.hpp"
#include "cryptoprint/metrics.hpp"
#include "cryptoprint/synth.hpp"
#include "cryptoprint/version.hpp"

namespace cryptoprint::exp {

enum class ExperimentKind {
    KeyLength,
    FileType,
    Latency,
    Multifamily,
    EntropyDist,
    Scaling,
};

inline constexpr std::array<std::string_view, 6> kExperimentKindTokens{
    "key_length", "file_type", "latency", "multifamily", "entropy_dist", "scaling"};

inline ExperimentKind parse_experiment_kind(std::string_view token) {
    for (std::size_t i = 0; i < kExperimentKindTokens.size(); ++i) {
        if (kExperimentKindTokens[i] == token) return static_cast<ExperimentKind>(i);
    }
    throw UnknownPreset(std::string(token));
}

inline std::string_view to_token(ExperimentKind kind) {
    return kExperimentKindTokens[static_cast<std::size_t>(kind)];
}

// --- aggregation ------------------------------------------------------------

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::uint64_t samples = 0;
};

inline Aggregate aggregate(const std::vector<double>& values) {
    Aggregate agg;
    agg.samples = values.size();
    if (values.empty()) return agg;
    agg.mean = population_mean(values);
    agg.stddev = std::sqrt(population_variance(values));
    return agg;
}

struct ExperimentRow {
    std::string label;
    std::vector<std::pair<std::string, Aggregate>> metrics;  // insertion-ordered
};

struct ExperimentReport {
    std::string kind;
    std::vector<std::uint64_t> seeds;
    ordered_json context;  // resolved configs + setup, for reproducibility
    std::vector<ExperimentRow> rows;
};

// --- shared pipeline ----------------------------------------------------------

struct PipelineOutcome {
    FootprintModel model;
    DetectionResult detection;
    std::vector<EncryptionEvent> eval_events;
    double detect_micros = 0.0;  // wall-clock time spent inside detect_stream
};

namespace detail {

// Same admission gate as detection: structurally invalid or sample-less
// events contribute nothing to the fit.
inline bool fit_admissible(const EncryptionEvent& event) {
    try {
        validate_event(event);
    } catch (const InvariantViolation&) {
        return false;
    }
    return !event.byte_sample.empty();
}

inline std::vector<std::vector<EncryptionEvent>> group_by_window(
    const std::vector<EncryptionEvent>& events, std::int64_t window_ms) {
    std::vector<std::vector<EncryptionEvent>> windows;
    std::int64_t current_close = 0;
    for (const auto& event : events) {
        const auto close = cryptoprint::detail::window_close(event.arrived_at_ms, window_ms);
        if (windows.empty() || close != current_close) {
            windows.emplace_back();
            current_close = close;
        }
        windows.back().push_back(event);
    }
    return windows;
}

}  // namespace detail

// Fits a baseline on the benign warmup slice of a stream. `fit_fraction` is
// the fraction of benign events (by arrival order) used for fitting.
inline FootprintModel fit_from_stream(const std::vector<EncryptionEvent>& events,
                                      const FeatureConfig& config,
                                      double fit_fraction = 0.3,
                                      std::int64_t* t_cut_out = nullptr) {
    std::vector<EncryptionEvent> benign;
    for (const auto& event : events) {
        if (event.truth.has_value() && event.truth->label == TruthLabel::Benign &&
            detail::fit_admissible(event)) {
            benign.push_back(event);
        }
    }
    const auto n_fit = static_cast<std::size_t>(
        std::floor(fit_fraction * static_cast<double>(benign.size())));
    if (n_fit < 2) {
        throw InsufficientData("benign warmup slice has fewer than 2 events");
    }
    benign.resize(n_fit);
    if (t_cut_out != nullptr) *t_cut_out = benign.back().arrived_at_ms;

    std::vector<FeatureVector> vectors;
    std::vector<TruthLabel> labels;
    for (const auto& window : detail::group_by_window(benign, config.window_ms)) {
        for (const auto& event : window) {
            vectors.push_back(extract_features(event, window, config));
            labels.push_back(TruthLabel::Benign);
        }
    }
    return fit_baseline(vectors, labels);
}

// Full per-seed pipeline: generate, fit on warmup, detect on the remainder.
inline PipelineOutcome run_pipeline(const synth::ScenarioConfig& scenario,
                                    const DetectorConfig& detector) {
    PipelineOutcome outcome;
    const auto events = synth::generate_scenario(scenario);
    std::int64_t t_cut = 0;
    outcome.model = fit_from_stream(events, detector.features, 0.3, &t_cut);
    for (const auto& event : events) {
        if (event.arrived_at_ms > t_cut) outcome.eval_events.push_back(event);
    }
    const auto started = std::chrono::steady_clock::now();
    outcome.detection = detect_stream(outcome.eval_events, outcome.model, detector);
    const auto elapsed = std::chrono::steady_clock::now() - started;
    outcome.detect_micros =
        std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(elapsed).count();
    return outcome;
}

// --- experiment implementations ---------------------------------------------------

namespace detail {

struct SampleColumns {
    // metric name -> one value per seed; insertion-ordered via names vector.
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> values;

    void add(const std::string& name, double value) {
        if (values.find(name) == values.end()) names.push_back(name);
        values[name].push_back(value);
    }
    void add(const std::string& name, std::optional<double> value) {
        if (value.has_value()) add(name, *value);
    }
};

inline ExperimentRow finish_row(const std::string& label, const SampleColumns& columns) {
    ExperimentRow row;
    row.label = label;
    for (const auto& name : columns.names) {
        row.metrics.emplace_back(name, aggregate(columns.values.at(name)));
    }
    return row;
}

inline DetectorConfig default_detector() { return DetectorConfig{}; }

inline ordered_json detector_context(const DetectorConfig& config) {
    return ordered_json{{"window_ms", config.features.window_ms},
                        {"block_size_bytes", config.features.block_size_bytes},
                        {"chi_square_min_bytes", config.features.chi_square_min_bytes},
                        {"cut_distance", config.cut_distance},
                        {"initial_theta", config.initial_theta},
                        {"eta", config.eta},
                        {"fpr_target", config.fpr_target},
                        {"feedback", config.feedback},
                        {"fit_fraction", 0.3}};
}

// Resolved setup for a scenario-driven experiment: detector parameters plus
// each sweep point's full config (the per-run seed comes from the seed list).
inline ordered_json sweep_context(const std::vector<synth::LabeledScenario>& variants,
                                  const DetectorConfig& config) {
    ordered_json scenarios = ordered_json::array();
    for (const auto& [label, scenario] : variants) {
        scenarios.push_back(
            {{"label", label}, {"config", synth::scenario_to_json(scenario)}});
    }
    return ordered_json{{"detector", detector_context(config)},
                        {"scenarios", std::move(scenarios)}};
}

inline ExperimentReport run_key_length(const std::vector<std::uint64_t>& seeds) {
    ExperimentReport report;
    const auto variants = synth::preset_scenarios("key-length-sweep");
    for (const auto& [label, base] : variants) {
        SampleColumns columns;
        for (const auto seed : seeds) {
            auto scenario = base;
            scenario.seed = seed;
            const auto outcome = run_pipeline(scenario, default_detector());
            const auto counts = eval::compute_confusion(outcome.detection.verdicts,
                                                        outcome.eval_events);
            const auto metrics = eval::compute_metrics(counts);
            columns.add("accuracy", metrics.accuracy);
            columns.add("recall", metrics.recall);
            columns.add("fpr", metrics.fpr);
        }
        report.rows.push_back(finish_row(label, columns));
    }
    report.kind = "key_length";
    report.seeds = seeds;
    report.context = sweep_context(variants, default_detector());
    return report;
}

inline ExperimentReport run_file_type(const std::vector<std::uint64_t>& seeds) {
    const auto presets = synth::preset_scenarios("file-type-fpr");
    const std::array<FileType, 3> types{FileType::Text, FileType::Image,
                                        FileType::Compressed};
    std::map<FileType, SampleColumns> by_type;
    SampleColumns overall;
    for (const auto seed : seeds) {
        auto scenario = presets.front().config;
        scenario.seed = seed;
        const auto outcome = run_pipeline(scenario, default_detector());
        std::map<std::uint64_t, const Verdict*> verdict_by_id;
        for (const auto& verdict : outcome.detection.verdicts) {
            verdict_by_id[verdict.event_id] = &verdict;
        }
        std::map<FileType, std::pair<std::uint64_t, std::uint64_t>> counts;  // fp, tn
        for (const auto& event : outcome.eval_events) {
            if (!event.truth.has_value() || event.truth->label != TruthLabel::Benign) continue;
            const auto it = verdict_by_id.find(event.event_id);
            if (it == verdict_by_id.end()) continue;
            auto& [fp, tn] = counts[event.file_type];
            it->second->label == TruthLabel::Malicious ? ++fp : ++tn;
        }
        for (const auto type : types) {
            const auto& [fp, tn] = counts[type];
            if (fp + tn > 0) {
                by_type[type].add("fpr",
                                  static_cast<double>(fp) / static_cast<double>(fp + tn));
            }
        }
        const auto metrics = eval::compute_metrics(
            eval::compute_confusion(outcome.detection.verdicts, outcome.eval_events));
        overall.add("accuracy", metrics.accuracy);
        overall.add("fpr", metrics.fpr);
    }
    ExperimentReport report;
    report.kind = "file_type";
    report.seeds = seeds;
    report.context = sweep_context(presets, default_detector());
    for (const auto type : types) {
        report.rows.push_back(finish_row(std::string(to_token(type)), by_type[type]));
    }
    report.rows.push_back(finish_row("overall", overall));
    return report;
}

inline ExperimentReport run_latency(const std::vector<std::uint64_t>& seeds) {
    ExperimentReport report;
    const auto variants = synth::preset_scenarios("latency-sweep");
    for (const auto& [label, base] : variants) {
        SampleColumns columns;
        for (const auto seed : seeds) {
            auto scenario = base;
            scenario.seed = seed;
            const auto outcome = run_pipeline(scenario, default_detector());
            const auto metrics = eval::compute_metrics(eval::compute_confusion(
                outcome.detection.verdicts, outcome.eval_events));
            const auto latency = eval::compute_latency_report(outcome.detection.verdicts,
                                                              outcome.eval_events);
            columns.add("accuracy", metrics.accuracy);
            columns.add("fpr", metrics.fpr);
            if (latency.overall.count > 0) {
                columns.add("mean_latency_ms", latency.overall.mean_s * 1000.0);
            }
        }
        report.rows.push_back(finish_row(label, columns));
    }
    report.kind = "latency";
    report.seeds = seeds;
    report.context = sweep_context(variants, default_detector());
    return report;
}

inline ExperimentReport run_multifamily(const std::vector<std::uint64_t>& seeds) {
    const auto presets = synth::preset_scenarios("multifamily");
    std::vector<std::string> families;
    for (const auto& activation : presets.front().config.families) {
        families.push_back(activation.params.family);
    }
    std::map<std::string, SampleColumns> by_family;
    SampleColumns overall;
    for (const auto seed : seeds) {
        auto scenario = presets.front().config;
        scenario.seed = seed;
        const auto outcome = run_pipeline(scenario, default_detector());
        const auto report_rows = eval::compute_metrics_report(outcome.detection.verdicts,
                                                              outcome.eval_events);
        for (const auto& row : report_rows.rows) {
            if (row.family.empty()) {
                overall.add("accuracy", row.metrics.accuracy);
                overall.add("precision", row.metrics.precision);
                overall.add("recall", row.metrics.recall);
                overall.add("fpr", row.metrics.fpr);
                continue;
            }
            by_family[row.family].add("recall", row.metrics.recall);
        }
        const auto latency = eval::compute_latency_report(outcome.detection.verdicts,
                                                          outcome.eval_events);
        for (const auto& [family, stats] : latency.per_family) {
            by_family[family].add("mean_latency_ms", stats.mean_s * 1000.0);
        }
    }
    ExperimentReport report;
    report.kind = "multifamily";
    report.seeds = seeds;
    report.context = sweep_context(presets, default_detector());
    for (const auto& family : families) {
        report.rows.push_back(finish_row(family, by_family[family]));
    }
    report.rows.push_back(finish_row("overall", overall));
    return report;
}

inline ExperimentReport run_entropy_dist(const std::vector<std::uint64_t>& seeds) {
    SampleColumns columns;
    constexpr std::uint64_t kPayloadCount = 200;
    constexpr std::uint64_t kMinSize = 1048576;
    constexpr std::uint64_t kMaxSize = 2097152;
    for (const auto seed : seeds) {
        std::uint64_t in_band = 0;
        double sum = 0.0;
        double min_h = 8.0;
        double max_h = 0.0;
        for (std::uint64_t i = 0; i < kPayloadCount; ++i) {
            const auto family =
                synth::kFamilyPresetNames[i % synth::kFamilyPresetNames.size()];
            const auto params = synth::family_preset(family);
            const std::uint64_t payload_seed = child_seed(seed, i);
            SplitMix64 rng(child_seed(payload_seed, 3));
            const auto size = synth::detail::log_uniform_size(rng, kMinSize, kMaxSize);
            const auto payload = synth::simulate_ransomware_payload(params, size, payload_seed);
            const double h = shannon_entropy(payload.data);
            sum += h;
            min_h = std::min(min_h, h);
            max_h = std::max(max_h, h);
            if (h >= 7.8 && h <= 8.2) ++in_band;
        }
        columns.add("fraction_in_band",
                    static_cast<double>(in_band) / static_cast<double>(kPayloadCount));
        columns.add("mean_entropy", sum / static_cast<double>(kPayloadCount));
        columns.add("min_entropy", min_h);
        columns.add("max_entropy", max_h);
    }
    ExperimentReport report;
    report.kind = "entropy_dist";
    report.seeds = seeds;
    ordered_json families = ordered_json::array();
    for (const auto family : synth::kFamilyPresetNames) families.push_back(family);
    report.context = ordered_json{{"payload_count", kPayloadCount},
                                  {"size_min_bytes", kMinSize},
                                  {"size_max_bytes", kMaxSize},
                                  {"families", std::move(families)},
                                  {"entropy_band", {7.8, 8.2}}};
    report.rows.push_back(finish_row("payloads", columns));
    return report;
}

inline ExperimentReport run_scaling(const std::vector<std::uint64_t>& seeds) {
    ExperimentReport report;
    const auto variants = synth::preset_scenarios("scaling");
    for (const auto& [label, base] : variants) {
        SampleColumns columns;
        for (const auto seed : seeds) {
            auto scenario = base;
            scenario.seed = seed;
            const auto outcome = run_pipeline(scenario, default_detector());
            const auto metrics = eval::compute_metrics(eval::compute_confusion(
                outcome.detection.verdicts, outcome.eval_events));
            columns.add("events", static_cast<double>(outcome.eval_events.size()));
            columns.add("per_event_us",
                        outcome.detect_micros /
                            static_cast<double>(outcome.eval_events.size()));
            columns.add("accuracy", metrics.accuracy);
        }
        report.rows.push_back(finish_row(label, columns));
    }
    report.kind = "scaling";
    report.seeds = seeds;
    report.context = sweep_context(variants, default_detector());
    return report;
}

}  // namespace detail

inline ExperimentReport run_experiment(ExperimentKind kind,
                                       const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw InvalidConfig("seeds", "need at least one seed");
    switch (kind) {
        case ExperimentKind::KeyLength: return detail::run_key_length(seeds);
        case ExperimentKind::FileType: return detail::run_file_type(seeds);
        case ExperimentKind::Latency: return detail::run_latency(seeds);
        case ExperimentKind::Multifamily: return detail::run_multifamily(seeds);
        case ExperimentKind::EntropyDist: return detail::run_entropy_dist(seeds);
        case ExperimentKind::Scaling: return detail::run_scaling(seeds);
    }
    throw InvalidConfig("kind", "unknown experiment kind");
}

// --- report emission ----------------------------------------------------------------

inline ordered_json report_to_json(const ExperimentReport& report) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json metrics;
        for (const auto& [name, agg] : row.metrics) {
            metrics[name] = {{"mean", agg.mean},
                             {"stddev", agg.stddev},
                             {"samples", agg.samples}};
        }
        rows.push_back({{"label", row.label}, {"metrics", std::move(metrics)}});
    }
    return ordered_json{{"kind", report.kind},
                        {"artifact_version", kArtifactVersion},
                        {"seeds", report.seeds},
                        {"context", report.context},
                        {"rows", std::move(rows)}};
}

inline std::string report_to_csv(const ExperimentReport& report) {
    std::string csv = "label,metric,mean,stddev,samples\n";
    char buf[128];
    for (const auto& row : report.rows) {
        for (const auto& [name, agg] : row.metrics) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.9g,%llu\n", row.label.c_str(),
                          name.c_str(), agg.mean, agg.stddev,
                          static_cast<unsigned long long>(agg.samples));
            csv += buf;
        }
    }
    return csv;
}

// Writes report.json and report.csv under `directory` (created if needed).
inline void write_report(const ExperimentReport& report, const std::string& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoFailure("cannot create directory '" + directory + "': " + ec.message());
    write_text_file(directory + "/report.json", report_to_json(report).dump(2) + "\n");
    write_text_file(directory + "/report.csv", report_to_csv(report));
}

}  // namespace cryptoprint::exp
