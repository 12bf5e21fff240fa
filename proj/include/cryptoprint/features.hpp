// Statistical features of encryption activity: byte-distribution measures of
// the sampled payload (entropy, block-entropy spread, chi-square uniformity)
// plus behavioral context (key reuse, burst rate) and categorical attributes.
// A feature vector has a fixed component order so models, distances, and
// serialized statistics all agree:
//
//   [0] entropy_mean        mean block entropy, bits/byte (whole-sample
//                           entropy when the sample is shorter than a block)
//   [1] entropy_variance    population variance of the block-entropy series
//   [2] chi_square_norm     chi-square against uniform bytes / 255 dof
//   [3] key_reuse           1 - distinct_keys/events over same-source window
//   [4] key_length_norm     (key_length_bits - 128) / 384
//   [5] burst_rate          same-source events per second in the window
//   [6..6+M)                mode one-hot (M = mode vocabulary size)
//   [last]                  handshake_irregular flag, 0/1
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"

namespace cryptoprint {

inline constexpr std::size_t kNumericFeatureCount = 6;
inline constexpr std::size_t kEntropyMeanIndex = 0;
inline constexpr std::size_t kEntropyVarianceIndex = 1;
inline constexpr std::size_t kChiSquareIndex = 2;
inline constexpr std::size_t kKeyReuseIndex = 3;
inline constexpr std::size_t kKeyLengthIndex = 4;
inline constexpr std::size_t kBurstRateIndex = 5;
inline constexpr std::size_t kModeOnehotIndex = 6;

inline constexpr double kStdFloor = 1e-6;

// Component layout of a feature vector: leading numeric features, then an
// optional one-hot categorical block, then an optional 0/1 flag. The standard
// event layout is {6 numeric, |mode vocabulary| one-hot, flag}; reduced
// layouts exist so the statistical core stays testable on small vectors.
struct FeatureLayout {
    std::size_t numeric_features = kNumericFeatureCount;
    std::size_t mode_count = kModeCount;
    bool has_flag = true;

    std::size_t dimension() const {
        return numeric_features + mode_count + (has_flag ? 1 : 0);
    }
    // Number of independently scored terms: each numeric feature, the
    // categorical block as one term, the flag as one term.
    std::size_t scored_terms() const {
        return numeric_features + (mode_count > 0 ? 1 : 0) + (has_flag ? 1 : 0);
    }

    bool operator==(const FeatureLayout&) const = default;
};

inline constexpr FeatureLayout kStandardLayout{};

struct FeatureVector {
    std::vector<double> values;

    FeatureVector() = default;
    explicit FeatureVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double entropy_mean() const { return values[kEntropyMeanIndex]; }
    double entropy_variance() const { return values[kEntropyVarianceIndex]; }
    double chi_square_norm() const { return values[kChiSquareIndex]; }
    double key_reuse() const { return values[kKeyReuseIndex]; }
    double key_length_norm() const { return values[kKeyLengthIndex]; }
    double burst_rate() const { return values[kBurstRateIndex]; }

    bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
    std::size_t block_size_bytes = 4096;       // >= 256
    std::size_t chi_square_min_bytes = 1024;   // minimum sample for chi-square
    std::int64_t window_ms = 2000;             // > 0

    bool operator==(const FeatureConfig&) const = default;
};

inline void validate_feature_config(const FeatureConfig& config) {
    if (config.block_size_bytes < 256) {
        throw InvalidConfig("block_size_bytes", "must be >= 256");
    }
    if (config.window_ms <= 0) throw InvalidConfig("window_ms", "must be > 0");
    if (config.chi_square_min_bytes == 0) {
        throw InvalidConfig("chi_square_min_bytes", "must be > 0");
    }
}

// Shannon entropy of the byte histogram, bits per byte, in [0, 8].
// Computed as log2(n) - sum(c * log2(c)) / n, which is exact for the
// degenerate cases (uniform, single-valued).
inline double shannon_entropy(std::span<const std::uint8_t> data) {
    if (data.empty()) throw EmptyInput("shannon_entropy requires at least one byte");
    std::array<std::uint64_t, 256> counts{};
    for (const auto byte : data) ++counts[byte];
    const double n = static_cast<double>(data.size());
    double weighted = 0.0;
    for (const auto count : counts) {
        if (count == 0) continue;
        weighted += static_cast<double>(count) * std::log2(static_cast<double>(count));
    }
    const double entropy = std::log2(n) - weighted / n;
    if (entropy < 0.0) return 0.0;
    if (entropy > 8.0) return 8.0;
    return entropy;
}

// Entropy of each complete consecutive block; a trailing partial block is
// dropped.
inline std::vector<double> block_entropy_series(std::span<const std::uint8_t> data,
                                                std::size_t block_size) {
    if (data.empty()) throw EmptyInput("block_entropy_series requires data");
    if (block_size == 0) throw InvalidConfig("block_size_bytes", "must be > 0");
    if (block_size > data.size()) {
        throw BlockTooLarge("block_size " + std::to_string(block_size) + " exceeds data length " +
                            std::to_string(data.size()));
    }
    std::vector<double> series;
    series.reserve(data.size() / block_size);
    for (std::size_t offset = 0; offset + block_size <= data.size(); offset += block_size) {
        series.push_back(shannon_entropy(data.subspan(offset, block_size)));
    }
    return series;
}

inline double population_mean(std::span<const double> values) {
    double sum = 0.0;
    for (const auto v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

inline double population_variance(std::span<const double> values) {
    const double mean = population_mean(values);
    double sum_sq = 0.0;
    for (const auto v : values) {
        const double d = v - mean;
        sum_sq += d * d;
    }
    return sum_sq / static_cast<double>(values.size());
}

// Population variance of the block-entropy series. A single block yields 0.
inline double entropy_variance(std::span<const std::uint8_t> data, std::size_t block_size) {
    const auto series = block_entropy_series(data, block_size);
    return population_variance(series);
}

// Chi-square statistic of the byte histogram against the uniform
// distribution, normalized by the 255 degrees of freedom. Uniform random
// data scores ~1.0.
inline double chi_square_uniformity(std::span<const std::uint8_t> data,
                                    std::size_t min_bytes = 1024) {
    if (data.size() < min_bytes) {
        throw InsufficientData("chi_square_uniformity requires >= " + std::to_string(min_bytes) +
                               " bytes, got " + std::to_string(data.size()));
    }
    std::array<std::uint64_t, 256> counts{};
    for (const auto byte : data) ++counts[byte];
    const double expected = static_cast<double>(data.size()) / 256.0;
    double chi_square = 0.0;
    for (const auto count : counts) {
        const double d = static_cast<double>(count) - expected;
        chi_square += d * d / expected;
    }
    return chi_square / 255.0;
}

// 1 - distinct(key_id)/count over the given events.
inline double key_reuse_frequency(std::span<const EncryptionEvent> events) {
    if (events.empty()) throw EmptyInput("key_reuse_frequency requires events");
    std::unordered_set<std::uint64_t> distinct;
    distinct.reserve(events.size());
    for (const auto& event : events) distinct.insert(event.crypto.key_id);
    return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(events.size());
}

// Same-source events per second of window span.
inline double burst_rate(std::span<const EncryptionEvent> window, std::string_view source_id,
                         std::int64_t window_ms) {
    if (window_ms <= 0) throw InvalidConfig("window_ms", "must be > 0");
    std::size_t matching = 0;
    for (const auto& event : window) {
        if (event.source_id == source_id) ++matching;
    }
    return static_cast<double>(matching) / (static_cast<double>(window_ms) / 1000.0);
}

// Full vector for one event given its window context. The window is expected
// to contain the event itself; if it does not, the event still counts toward
// its own context. Behavioral components (key_reuse, burst_rate) use the
// same-source subset of the window.
inline FeatureVector extract_features(const EncryptionEvent& event,
                                      std::span<const EncryptionEvent> window,
                                      const FeatureConfig& config = {}) {
    validate_feature_config(config);
    if (event.byte_sample.empty()) {
        throw EmptyInput("event " + std::to_string(event.event_id) + " has an empty byte_sample");
    }
    const std::span<const std::uint8_t> sample(event.byte_sample);

    double mean_entropy = 0.0;
    double var_entropy = 0.0;
    if (sample.size() < config.block_size_bytes) {
        // Single-block fallback: whole-sample entropy, zero variance.
        mean_entropy = shannon_entropy(sample);
    } else {
        const auto series = block_entropy_series(sample, config.block_size_bytes);
        mean_entropy = population_mean(series);
        var_entropy = population_variance(series);
    }

    // Short samples cannot support the chi-square test; they contribute a
    // zero rather than failing the whole event.
    const double chi_square = sample.size() >= config.chi_square_min_bytes
                                  ? chi_square_uniformity(sample, config.chi_square_min_bytes)
                                  : 0.0;

    std::vector<const EncryptionEvent*> same_source;
    bool saw_self = false;
    for (const auto& other : window) {
        if (other.source_id == event.source_id) {
            same_source.push_back(&other);
            if (other.event_id == event.event_id) saw_self = true;
        }
    }
    std::vector<EncryptionEvent> context;
    context.reserve(same_source.size() + 1);
    for (const auto* p : same_source) context.push_back(*p);
    if (!saw_self) context.push_back(event);

    const double reuse = key_reuse_frequency(context);
    const double burst =
        static_cast<double>(context.size()) / (static_cast<double>(config.window_ms) / 1000.0);

    FeatureVector vec;
    vec.values.assign(kStandardLayout.dimension(), 0.0);
    vec.values[kEntropyMeanIndex] = mean_entropy;
    vec.values[kEntropyVarianceIndex] = var_entropy;
    vec.values[kChiSquareIndex] = chi_square;
    vec.values[kKeyReuseIndex] = reuse;
    vec.values[kKeyLengthIndex] =
        (static_cast<double>(event.crypto.key_length_bits) - 128.0) / 384.0;
    vec.values[kBurstRateIndex] = burst;
    vec.values[kModeOnehotIndex + static_cast<std::size_t>(event.crypto.mode)] = 1.0;
    vec.values[kStandardLayout.dimension() - 1] = event.crypto.handshake_irregular ? 1.0 : 0.0;
    return vec;
}

// Per-component mean and population standard deviation of a fit set. The
// floor keeps later z-scores finite for constant components.
struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // >= kStdFloor per component
    std::size_t fit_count = 0;

    std::size_t dimension() const { return mean.size(); }

    bool operator==(const NormalizationStats&) const = default;
};

inline NormalizationStats fit_normalization(std::span<const FeatureVector> vectors) {
    if (vectors.empty()) throw EmptyInput("fit_normalization requires vectors");
    const std::size_t dim = vectors.front().size();
    for (const auto& vec : vectors) {
        if (vec.size() != dim) {
            throw DimensionMismatch("fit_normalization saw vectors of size " +
                                    std::to_string(dim) + " and " + std::to_string(vec.size()));
        }
    }
    NormalizationStats stats;
    stats.mean.assign(dim, 0.0);
    stats.stddev.assign(dim, 0.0);
    stats.fit_count = vectors.size();
    const double n = static_cast<double>(vectors.size());
    for (const auto& vec : vectors) {
        for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += vec[i];
    }
    for (std::size_t i = 0; i < dim; ++i) stats.mean[i] /= n;
    for (const auto& vec : vectors) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = vec[i] - stats.mean[i];
            stats.stddev[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < dim; ++i) {
        stats.stddev[i] = std::sqrt(stats.stddev[i] / n);
        if (stats.stddev[i] < kStdFloor) stats.stddev[i] = kStdFloor;
    }
    return stats;
}

// Z-scores the numeric components; one-hot and flag components pass through
// unchanged.
inline FeatureVector apply_normalization(const FeatureVector& vec,
                                         const NormalizationStats& stats,
                                         const FeatureLayout& layout = kStandardLayout) {
    if (vec.size() != stats.dimension()) {
        throw DimensionMismatch("vector size " + std::to_string(vec.size()) +
                                " vs stats dimension " + std::to_string(stats.dimension()));
    }
    if (vec.size() != layout.dimension()) {
        throw DimensionMismatch("vector size " + std::to_string(vec.size()) +
                                " vs layout dimension " + std::to_string(layout.dimension()));
    }
    FeatureVector out = vec;
    for (std::size_t i = 0; i < layout.numeric_features; ++i) {
        out.values[i] = (vec[i] - stats.mean[i]) / stats.stddev[i];
    }
    return out;
}

// Inverse of apply_normalization on the numeric components.
inline FeatureVector invert_normalization(const FeatureVector& vec,
                                          const NormalizationStats& stats,
                                          const FeatureLayout& layout = kStandardLayout) {
    if (vec.size() != stats.dimension() || vec.size() != layout.dimension()) {
        throw DimensionMismatch("invert_normalization dimension disagreement");
    }
    FeatureVector out = vec;
    for (std::size_t i = 0; i < layout.numeric_features; ++i) {
        out.values[i] = vec[i] * stats.stddev[i] + stats.mean[i];
    }
    return out;
}

}  // namespace cryptoprint
