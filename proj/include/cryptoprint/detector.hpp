// Streaming detector: tumbling arrival-time windows, per-window feature
// extraction and scoring, average-linkage clustering, cluster-mean
// classification, and optional multiplicative threshold feedback.
//
// Windows are half-open on the left: window k covers arrivals in
// ((k-1)*W, k*W] and closes at k*W, which is the detected_at_ms of every
// verdict it emits. This keeps the latency bound strict:
// detected_at_ms - arrived_at_ms < window_ms always.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cryptoprint/clustering.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"
#include "cryptoprint/features.hpp"
#include "cryptoprint/footprint.hpp"
#include "cryptoprint/verdict.hpp"

namespace cryptoprint {

inline constexpr double kThetaMin = 0.05;
inline constexpr double kThetaMax = 0.99;
inline constexpr double kDefaultTheta = 0.5;
inline constexpr double kDefaultEta = 0.1;
inline constexpr double kDefaultFprTarget = 0.02;
inline constexpr double kDefaultCutDistance = 1.5;
inline constexpr std::size_t kThresholdHistoryCap = 128;

// Classification threshold plus the feedback parameters that steer it.
struct ThresholdState {
    double theta = kDefaultTheta;      // in (0, 1), clamped to [kThetaMin, kThetaMax]
    double eta = kDefaultEta;          // learning rate
    double fpr_target = kDefaultFprTarget;
    std::vector<std::pair<std::uint64_t, double>> history;  // recent (window, observed FPR)

    bool operator==(const ThresholdState&) const = default;
};

// theta' = clamp(theta * (1 + eta * (observed_fpr - fpr_target))).
// Observed FPR above target raises theta (fewer malicious labels, fewer false
// positives); below target lowers it. Either way the step is proportional to
// the miss, so the threshold settles where observed FPR matches the target.
inline ThresholdState update_threshold(const ThresholdState& state, double observed_fpr,
                                       std::uint64_t window_index = 0) {
    if (!(observed_fpr >= 0.0 && observed_fpr <= 1.0)) {
        throw InvalidConfig("observed_fpr", "must lie in [0, 1]");
    }
    ThresholdState next = state;
    next.theta = state.theta * (1.0 + state.eta * (observed_fpr - state.fpr_target));
    next.theta = std::clamp(next.theta, kThetaMin, kThetaMax);
    next.history.emplace_back(window_index, observed_fpr);
    if (next.history.size() > kThresholdHistoryCap) {
        next.history.erase(next.history.begin(),
                           next.history.begin() +
                               static_cast<std::ptrdiff_t>(next.history.size() -
                                                           kThresholdHistoryCap));
    }
    return next;
}

// A cut cluster materialized against its window: member events, centroid in
// normalized feature space, and the mean calibrated member score.
struct Cluster {
    std::vector<std::uint64_t> member_event_ids;
    std::vector<std::size_t> member_indices;  // window-local positions
    FeatureVector centroid;
    double cluster_score = 0.0;
};

// Mean calibrated member score per cluster.
inline std::vector<double> score_clusters(std::span<const std::vector<std::size_t>> partition,
                                          std::span<const double> member_calibrated) {
    std::vector<double> scores;
    scores.reserve(partition.size());
    for (const auto& members : partition) {
        if (members.empty()) throw EmptyInput("cluster with no members");
        double sum = 0.0;
        for (const auto index : members) {
            if (index >= member_calibrated.size()) {
                throw DimensionMismatch("cluster member index out of range");
            }
            sum += member_calibrated[index];
        }
        scores.push_back(sum / static_cast<double>(members.size()));
    }
    return scores;
}

// Threshold classification: a cluster is malicious iff its score is at or
// above theta (inclusive boundary), and every member inherits the cluster
// label while keeping its own calibrated score. Verdicts are emitted cluster
// by cluster; cluster ids start at first_cluster_id in cluster order.
inline std::vector<Verdict> classify_clusters(std::span<const Cluster> clusters,
                                              std::span<const double> member_calibrated,
                                              double theta, std::int64_t detected_at_ms,
                                              std::uint64_t first_cluster_id = 0) {
    std::vector<Verdict> verdicts;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto& cluster = clusters[c];
        const bool malicious = cluster.cluster_score >= theta;
        for (std::size_t m = 0; m < cluster.member_event_ids.size(); ++m) {
            const auto index = cluster.member_indices[m];
            if (index >= member_calibrated.size()) {
                throw DimensionMismatch("cluster member index out of range");
            }
            verdicts.push_back({cluster.member_event_ids[m], first_cluster_id + c,
                                member_calibrated[index],
                                malicious ? TruthLabel::Malicious : TruthLabel::Benign,
                                detected_at_ms});
        }
    }
    return verdicts;
}

// Component-wise weights for clustering distances, expanded from the model's
// per-term weights: numeric features keep their own weight, every one-hot
// component shares the mode term's weight, the flag keeps the flag weight.
inline std::vector<double> component_weights(const FootprintModel& model) {
    const auto& layout = model.layout;
    std::vector<double> weights;
    weights.reserve(layout.dimension());
    for (std::size_t i = 0; i < layout.numeric_features; ++i) {
        weights.push_back(model.feature_weights[i]);
    }
    if (layout.mode_count > 0) {
        const double w = model.feature_weights[layout.numeric_features];
        for (std::size_t i = 0; i < layout.mode_count; ++i) weights.push_back(w);
    }
    if (layout.has_flag) {
        weights.push_back(model.feature_weights[layout.scored_terms() - 1]);
    }
    return weights;
}

struct DetectorConfig {
    FeatureConfig features;
    double cut_distance = kDefaultCutDistance;
    double initial_theta = kDefaultTheta;
    double eta = kDefaultEta;
    double fpr_target = kDefaultFprTarget;
    bool feedback = false;

    bool operator==(const DetectorConfig&) const = default;
};

inline void validate_detector_config(const DetectorConfig& config) {
    validate_feature_config(config.features);
    if (!(config.cut_distance >= 0.0)) throw InvalidConfig("cut_distance", "must be >= 0");
    if (!(config.initial_theta > 0.0 && config.initial_theta < 1.0)) {
        throw InvalidConfig("initial_theta", "must lie in (0, 1)");
    }
    if (!(config.eta >= 0.0)) throw InvalidConfig("eta", "must be >= 0");
    if (!(config.fpr_target >= 0.0 && config.fpr_target <= 1.0)) {
        throw InvalidConfig("fpr_target", "must lie in [0, 1]");
    }
}

struct SkippedEvent {
    std::uint64_t event_id = 0;
    std::string reason;
};

struct DetectionResult {
    std::vector<Verdict> verdicts;        // arrival order of the surviving events
    std::vector<Cluster> clusters;        // all clusters, stream order
    ThresholdState threshold;             // state after the last window
    std::vector<SkippedEvent> skipped;    // events dropped by validation
    std::size_t window_count = 0;
};

namespace detail {

// Window close for an arrival: the smallest multiple of W at or above it.
inline std::int64_t window_close(std::int64_t arrived_at_ms, std::int64_t window_ms) {
    const std::int64_t q = arrived_at_ms / window_ms;
    const std::int64_t floor_q = (arrived_at_ms % window_ms != 0 && arrived_at_ms < 0) ? q - 1 : q;
    const std::int64_t up = floor_q * window_ms;
    return up == arrived_at_ms ? up : up + window_ms;
}

}  // namespace detail

// Runs the full per-window pipeline over an arrival-ordered stream. Events
// failing validation (or unscoreable ones, e.g. empty samples) are skipped
// with a diagnostic and excluded from window context. When feedback is
// enabled and a window holds truth-labeled benign events, the threshold is
// updated from that window's observed false-positive rate before the next
// window is scored.
inline DetectionResult detect_stream(std::span<const EncryptionEvent> events,
                                     const FootprintModel& model,
                                     const DetectorConfig& config = {}) {
    validate_detector_config(config);
    validate_model(model);

    DetectionResult result;
    result.threshold.theta = config.initial_theta;
    result.threshold.eta = config.eta;
    result.threshold.fpr_target = config.fpr_target;

    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].arrived_at_ms < events[i - 1].arrived_at_ms) {
            throw UnorderedInput("event " + std::to_string(events[i].event_id) +
                                 " arrives at " + std::to_string(events[i].arrived_at_ms) +
                                 " after event at " +
                                 std::to_string(events[i - 1].arrived_at_ms));
        }
    }

    const std::int64_t window_ms = config.features.window_ms;
    const auto weights = component_weights(model);
    std::uint64_t next_cluster_id = 0;

    std::size_t begin = 0;
    while (begin < events.size()) {
        const std::int64_t close = detail::window_close(events[begin].arrived_at_ms, window_ms);
        std::size_t end = begin;
        while (end < events.size() && events[end].arrived_at_ms <= close) ++end;
        ++result.window_count;

        // Validation gate; survivors form the window context.
        std::vector<EncryptionEvent> window;
        window.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            try {
                validate_event(events[i]);
                if (events[i].byte_sample.empty()) {
                    throw EmptyInput("empty byte_sample");
                }
                window.push_back(events[i]);
            } catch (const Error& e) {
                result.skipped.push_back({events[i].event_id, e.what()});
            }
        }
        begin = end;
        if (window.empty()) continue;

        std::vector<FeatureVector> normalized;
        std::vector<double> calibrated;
        normalized.reserve(window.size());
        calibrated.reserve(window.size());
        for (const auto& event : window) {
            const auto vec = extract_features(event, window, config.features);
            auto norm = apply_normalization(vec, model.normalization, model.layout);
            calibrated.push_back(anomaly_score(model, norm).calibrated);
            normalized.push_back(std::move(norm));
        }

        const auto dendrogram = agglomerate(normalized, weights);
        const auto partition = cut_dendrogram(dendrogram, config.cut_distance);
        const auto cluster_scores = score_clusters(partition, calibrated);

        std::size_t fp = 0, tn = 0;
        std::vector<Verdict> window_verdicts(window.size());
        for (std::size_t c = 0; c < partition.size(); ++c) {
            Cluster cluster;
            cluster.member_indices = partition[c];
            cluster.cluster_score = cluster_scores[c];
            cluster.centroid.values.assign(model.layout.dimension(), 0.0);
            for (const auto index : partition[c]) {
                cluster.member_event_ids.push_back(window[index].event_id);
                for (std::size_t d = 0; d < model.layout.dimension(); ++d) {
                    cluster.centroid.values[d] += normalized[index][d];
                }
            }
            for (auto& v : cluster.centroid.values) {
                v /= static_cast<double>(partition[c].size());
            }

            const bool malicious = cluster.cluster_score >= result.threshold.theta;
            const std::uint64_t cluster_id = next_cluster_id++;
            for (const auto index : partition[c]) {
                Verdict& verdict = window_verdicts[index];
                verdict.event_id = window[index].event_id;
                verdict.cluster_id = cluster_id;
                verdict.score = calibrated[index];
                verdict.label = malicious ? TruthLabel::Malicious : TruthLabel::Benign;
                verdict.detected_at_ms = close;

                if (config.feedback && window[index].truth &&
                    window[index].truth->label == TruthLabel::Benign) {
                    if (malicious) {
                        ++fp;
                    } else {
                        ++tn;
                    }
                }
            }
            result.clusters.push_back(std::move(cluster));
        }
        // Emit in arrival order, not cluster order.
        result.verdicts.insert(result.verdicts.end(), window_verdicts.begin(),
                               window_verdicts.end());

        if (config.feedback && fp + tn > 0) {
            const double observed = static_cast<double>(fp) / static_cast<double>(fp + tn);
            result.threshold = update_threshold(
                result.threshold, observed,
                static_cast<std::uint64_t>(close / window_ms));
        }
    }
    return result;
}

}  // namespace cryptoprint
