// Probabilistic footprint of benign encryption activity, and the anomaly
// score measuring how far an observation falls outside it.
//
// The model is fit on benign feature vectors only. Numeric features carry an
// independent Gaussian density in normalized space; the categorical blocks
// (cipher mode, handshake flag) carry Laplace-smoothed priors. A feature's
// contribution to the raw score is its surprisal above the benign mode of
// that feature:
//
//   raw(x) = sum_f  w_f * max(0, -loglik_f(x) - c_f)
//
// where c_f is the negated log-density at the feature's benign mode, so a
// vector sitting exactly on every benign mode scores 0. The raw score is
// squashed to (0, 1) by a logistic curve whose midpoint is the 97th
// percentile (nearest-rank) of the fit set's own raw scores: roughly 3% of
// benign fit data calibrates above 0.5 before any threshold feedback.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"
#include "cryptoprint/features.hpp"

namespace cryptoprint {

inline constexpr int kModelVersion = 1;
inline constexpr double kDefaultLogisticSlope = 1.0;
inline constexpr double kCalibrationPercentile = 0.97;

struct GaussianParams {
    double mean = 0.0;
    double stddev = 1.0;  // >= kStdFloor

    bool operator==(const GaussianParams&) const = default;
};

struct LogisticCalibration {
    double slope = kDefaultLogisticSlope;  // k
    double midpoint = 0.0;                 // m, raw-score units

    bool operator==(const LogisticCalibration&) const = default;
};

struct FootprintModel {
    int model_version = kModelVersion;
    FeatureLayout layout;
    NormalizationStats normalization;
    std::vector<GaussianParams> densities;  // one per numeric feature, normalized space
    std::vector<double> mode_priors;        // Laplace-smoothed, layout.mode_count entries
    std::vector<double> flag_priors;        // {P(flag=0), P(flag=1)} when layout.has_flag
    std::vector<double> feature_weights;    // scored_terms() entries, all >= 0, not all 0
    LogisticCalibration calibration;

    bool operator==(const FootprintModel&) const = default;
};

struct AnomalyScore {
    double raw = 0.0;         // >= 0
    double calibrated = 0.0;  // in (0, 1)

    bool operator==(const AnomalyScore&) const = default;
};

namespace detail {

inline double log_normal_pdf(double x, const GaussianParams& g) {
    static const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const double z = (x - g.mean) / g.stddev;
    return -kHalfLog2Pi - std::log(g.stddev) - 0.5 * z * z;
}

inline std::size_t active_mode_index(const FeatureVector& vec, const FeatureLayout& layout) {
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t i = 0; i < layout.mode_count; ++i) {
        const double v = vec[layout.numeric_features + i];
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return best;
}

inline void check_model_vector(const FootprintModel& model, const FeatureVector& vec) {
    if (vec.size() != model.layout.dimension()) {
        throw DimensionMismatch("vector size " + std::to_string(vec.size()) +
                                " vs model dimension " +
                                std::to_string(model.layout.dimension()));
    }
}

}  // namespace detail

// Per-term log-likelihoods of a *normalized* vector under the model, in
// scoring order: numeric features, then mode block, then flag.
inline std::vector<double> feature_log_likelihood(const FootprintModel& model,
                                                  const FeatureVector& normalized) {
    detail::check_model_vector(model, normalized);
    std::vector<double> loglik;
    loglik.reserve(model.layout.scored_terms());
    for (std::size_t i = 0; i < model.layout.numeric_features; ++i) {
        loglik.push_back(detail::log_normal_pdf(normalized[i], model.densities[i]));
    }
    if (model.layout.mode_count > 0) {
        const std::size_t active = detail::active_mode_index(normalized, model.layout);
        loglik.push_back(std::log(model.mode_priors[active]));
    }
    if (model.layout.has_flag) {
        const bool raised = normalized[model.layout.dimension() - 1] > 0.5;
        loglik.push_back(std::log(model.flag_priors[raised ? 1 : 0]));
    }
    return loglik;
}

// Negated log-density of each scored term at its benign mode: the baseline
// against which surprisal is measured.
inline std::vector<double> benign_mode_surprisal(const FootprintModel& model) {
    std::vector<double> baseline;
    baseline.reserve(model.layout.scored_terms());
    for (std::size_t i = 0; i < model.layout.numeric_features; ++i) {
        const auto& g = model.densities[i];
        baseline.push_back(-detail::log_normal_pdf(g.mean, g));
    }
    if (model.layout.mode_count > 0) {
        baseline.push_back(-std::log(*std::max_element(model.mode_priors.begin(),
                                                       model.mode_priors.end())));
    }
    if (model.layout.has_flag) {
        baseline.push_back(-std::log(std::max(model.flag_priors[0], model.flag_priors[1])));
    }
    return baseline;
}

inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline AnomalyScore anomaly_score(const FootprintModel& model, const FeatureVector& normalized) {
    const auto loglik = feature_log_likelihood(model, normalized);
    const auto baseline = benign_mode_surprisal(model);
    double raw = 0.0;
    for (std::size_t f = 0; f < loglik.size(); ++f) {
        const double surplus = -loglik[f] - baseline[f];
        if (surplus > 0.0) raw += model.feature_weights[f] * surplus;
    }
    AnomalyScore score;
    score.raw = raw;
    score.calibrated =
        logistic(model.calibration.slope * (raw - model.calibration.midpoint));
    return score;
}

// Nearest-rank percentile: the smallest element with at least p*N elements
// at or below it.
inline double nearest_rank_percentile(std::vector<double> values, double p) {
    if (values.empty()) throw EmptyInput("percentile of empty set");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * n));
    if (rank == 0) rank = 1;
    if (rank > values.size()) rank = values.size();
    return values[rank - 1];
}

// Fits normalization, per-feature densities, categorical priors, and the
// logistic calibration from benign-labeled vectors. `labels` runs parallel to
// `vectors`; any malicious label aborts the fit.
inline FootprintModel fit_baseline(std::span<const FeatureVector> vectors,
                                   std::span<const TruthLabel> labels,
                                   const FeatureLayout& layout = kStandardLayout,
                                   std::vector<double> feature_weights = {}) {
    if (vectors.empty()) throw EmptyInput("fit_baseline requires vectors");
    if (vectors.size() < 2) {
        throw InsufficientData("fit_baseline requires at least 2 vectors");
    }
    if (labels.size() != vectors.size()) {
        throw DimensionMismatch("fit_baseline: " + std::to_string(vectors.size()) +
                                " vectors but " + std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != TruthLabel::Benign) {
            throw MixedLabels("fit_baseline input " + std::to_string(i) +
                              " is not benign-labeled");
        }
    }
    for (const auto& vec : vectors) {
        if (vec.size() != layout.dimension()) {
            throw DimensionMismatch("fit vector size " + std::to_string(vec.size()) +
                                    " vs layout dimension " +
                                    std::to_string(layout.dimension()));
        }
    }

    FootprintModel model;
    model.layout = layout;
    model.normalization = fit_normalization(vectors);

    std::vector<FeatureVector> normalized;
    normalized.reserve(vectors.size());
    for (const auto& vec : vectors) {
        normalized.push_back(apply_normalization(vec, model.normalization, layout));
    }

    const double n = static_cast<double>(vectors.size());
    model.densities.resize(layout.numeric_features);
    for (std::size_t i = 0; i < layout.numeric_features; ++i) {
        double mean = 0.0;
        for (const auto& vec : normalized) mean += vec[i];
        mean /= n;
        double var = 0.0;
        for (const auto& vec : normalized) {
            const double d = vec[i] - mean;
            var += d * d;
        }
        var /= n;
        model.densities[i] = {mean, std::max(std::sqrt(var), kStdFloor)};
    }

    if (layout.mode_count > 0) {
        std::vector<double> counts(layout.mode_count, 0.0);
        for (const auto& vec : normalized) {
            counts[detail::active_mode_index(vec, layout)] += 1.0;
        }
        model.mode_priors.resize(layout.mode_count);
        for (std::size_t i = 0; i < layout.mode_count; ++i) {
            model.mode_priors[i] =
                (counts[i] + 1.0) / (n + static_cast<double>(layout.mode_count));
        }
    }
    if (layout.has_flag) {
        double raised = 0.0;
        for (const auto& vec : normalized) {
            if (vec[layout.dimension() - 1] > 0.5) raised += 1.0;
        }
        model.flag_priors = {(n - raised + 1.0) / (n + 2.0), (raised + 1.0) / (n + 2.0)};
    }

    if (feature_weights.empty()) {
        model.feature_weights.assign(layout.scored_terms(), 1.0);
    } else {
        if (feature_weights.size() != layout.scored_terms()) {
            throw DimensionMismatch("feature_weights size " +
                                    std::to_string(feature_weights.size()) + " vs " +
                                    std::to_string(layout.scored_terms()) + " scored terms");
        }
        bool any_positive = false;
        for (const auto w : feature_weights) {
            if (w < 0.0) throw InvalidConfig("feature_weights", "weights must be >= 0");
            if (w > 0.0) any_positive = true;
        }
        if (!any_positive) throw InvalidConfig("feature_weights", "weights must not all be 0");
        model.feature_weights = std::move(feature_weights);
    }

    // Calibration midpoint: upper-tail percentile of the fit set's own raw scores.
    model.calibration.slope = kDefaultLogisticSlope;
    model.calibration.midpoint = 0.0;
    std::vector<double> raw_scores;
    raw_scores.reserve(normalized.size());
    for (const auto& vec : normalized) {
        raw_scores.push_back(anomaly_score(model, vec).raw);
    }
    model.calibration.midpoint = nearest_rank_percentile(std::move(raw_scores),
                                                         kCalibrationPercentile);
    return model;
}

inline void validate_model(const FootprintModel& model) {
    const auto& layout = model.layout;
    if (layout.dimension() == 0) throw MalformedModel("layout has zero dimension");
    if (model.normalization.dimension() != layout.dimension() ||
        model.normalization.stddev.size() != layout.dimension()) {
        throw MalformedModel("normalization dimension disagrees with layout");
    }
    if (model.normalization.fit_count < 2) throw MalformedModel("fit_count must be >= 2");
    for (const auto s : model.normalization.stddev) {
        if (!(s >= kStdFloor)) throw MalformedModel("normalization stddev below floor");
    }
    if (model.densities.size() != layout.numeric_features) {
        throw MalformedModel("density count disagrees with layout");
    }
    for (const auto& g : model.densities) {
        if (!std::isfinite(g.mean) || !(g.stddev >= kStdFloor)) {
            throw MalformedModel("density parameters out of range");
        }
    }
    if (model.mode_priors.size() != layout.mode_count) {
        throw MalformedModel("mode prior count disagrees with layout");
    }
    double prior_sum = 0.0;
    for (const auto p : model.mode_priors) {
        if (!(p > 0.0 && p < 1.0)) throw MalformedModel("mode prior out of (0,1)");
        prior_sum += p;
    }
    if (layout.mode_count > 0 && std::abs(prior_sum - 1.0) > 1e-9) {
        throw MalformedModel("mode priors must sum to 1");
    }
    if (layout.has_flag) {
        if (model.flag_priors.size() != 2) throw MalformedModel("flag priors must have 2 entries");
        for (const auto p : model.flag_priors) {
            if (!(p > 0.0 && p < 1.0)) throw MalformedModel("flag prior out of (0,1)");
        }
        if (std::abs(model.flag_priors[0] + model.flag_priors[1] - 1.0) > 1e-9) {
            throw MalformedModel("flag priors must sum to 1");
        }
    } else if (!model.flag_priors.empty()) {
        throw MalformedModel("flag priors present without a flag component");
    }
    if (model.feature_weights.size() != layout.scored_terms()) {
        throw MalformedModel("weight count disagrees with scored terms");
    }
    bool any_positive = false;
    for (const auto w : model.feature_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw MalformedModel("weight out of range");
        if (w > 0.0) any_positive = true;
    }
    if (!any_positive) throw MalformedModel("weights must not all be zero");
    if (!std::isfinite(model.calibration.slope) || model.calibration.slope <= 0.0) {
        throw MalformedModel("calibration slope must be positive");
    }
    if (!std::isfinite(model.calibration.midpoint) || model.calibration.midpoint < 0.0) {
        throw MalformedModel("calibration midpoint must be >= 0");
    }
}

// --- serialization ------------------------------------------------------

// Doubles survive the JSON round trip bit-exactly (shortest round-trip
// decimal form), so load_model(save_model(m)) == m.
inline nlohmann::ordered_json model_to_json(const FootprintModel& model) {
    nlohmann::ordered_json doc;
    doc["model_version"] = model.model_version;
    doc["layout"] = {{"numeric_features", model.layout.numeric_features},
                     {"mode_count", model.layout.mode_count},
                     {"has_flag", model.layout.has_flag}};
    doc["normalization"] = {{"mean", model.normalization.mean},
                            {"stddev", model.normalization.stddev},
                            {"fit_count", model.normalization.fit_count}};
    nlohmann::ordered_json densities = nlohmann::ordered_json::array();
    for (const auto& g : model.densities) {
        densities.push_back({{"mean", g.mean}, {"stddev", g.stddev}});
    }
    doc["densities"] = std::move(densities);
    doc["mode_priors"] = model.mode_priors;
    doc["flag_priors"] = model.flag_priors;
    doc["feature_weights"] = model.feature_weights;
    doc["calibration"] = {{"slope", model.calibration.slope},
                          {"midpoint", model.calibration.midpoint}};
    return doc;
}

inline std::string save_model(const FootprintModel& model) {
    return model_to_json(model).dump(2) + "\n";
}

inline FootprintModel load_model(std::string_view text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedModel(std::string("model document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw MalformedModel("model document is not a JSON object");

    const auto version_it = doc.find("model_version");
    if (version_it == doc.end() || !version_it->is_number_integer()) {
        throw MalformedModel("missing model_version");
    }
    const auto version = version_it->get<int>();
    if (version != kModelVersion) {
        throw VersionMismatch("model_version " + std::to_string(version) +
                              " is not supported (expected " + std::to_string(kModelVersion) +
                              ")");
    }

    FootprintModel model;
    model.model_version = version;
    try {
        const auto& layout = doc.at("layout");
        model.layout.numeric_features = layout.at("numeric_features").get<std::size_t>();
        model.layout.mode_count = layout.at("mode_count").get<std::size_t>();
        model.layout.has_flag = layout.at("has_flag").get<bool>();
        const auto& norm = doc.at("normalization");
        model.normalization.mean = norm.at("mean").get<std::vector<double>>();
        model.normalization.stddev = norm.at("stddev").get<std::vector<double>>();
        model.normalization.fit_count = norm.at("fit_count").get<std::size_t>();
        for (const auto& g : doc.at("densities")) {
            model.densities.push_back(
                {g.at("mean").get<double>(), g.at("stddev").get<double>()});
        }
        model.mode_priors = doc.at("mode_priors").get<std::vector<double>>();
        model.flag_priors = doc.at("flag_priors").get<std::vector<double>>();
        model.feature_weights = doc.at("feature_weights").get<std::vector<double>>();
        model.calibration.slope = doc.at("calibration").at("slope").get<double>();
        model.calibration.midpoint = doc.at("calibration").at("midpoint").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("model document structure: ") + e.what());
    }
    validate_model(model);
    return model;
}

}  // namespace cryptoprint
