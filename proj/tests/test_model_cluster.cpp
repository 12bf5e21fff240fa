// Model-layer tests: baseline fitting and anomaly scoring with closed-form
// oracles, model serialization, average-linkage clustering against a
// brute-force replay, verdicts, and the windowed detector.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "cryptoprint/clustering.hpp"
#include "cryptoprint/detector.hpp"
#include "cryptoprint/experiments.hpp"
#include "cryptoprint/footprint.hpp"
#include "cryptoprint/synth.hpp"
#include "cryptoprint/verdict.hpp"

#include "support/builders.hpp"
#include "support/oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace cryptoprint;

namespace {

// A standard-layout vector with the given numerics, mode index, and flag.
FeatureVector standard_vector(std::vector<double> numerics, std::size_t mode, bool flag) {
    FeatureVector vec;
    vec.values.assign(kStandardLayout.dimension(), 0.0);
    for (std::size_t i = 0; i < numerics.size(); ++i) vec.values[i] = numerics[i];
    vec.values[kModeOnehotIndex + mode] = 1.0;
    vec.values[kStandardLayout.dimension() - 1] = flag ? 1.0 : 0.0;
    return vec;
}

std::vector<TruthLabel> benign_labels(std::size_t n) {
    return std::vector<TruthLabel>(n, TruthLabel::Benign);
}

// Deterministic batch of standard-layout vectors for fitting.
std::vector<FeatureVector> random_standard_vectors(std::uint64_t seed, std::size_t n) {
    SplitMix64 rng(seed);
    std::vector<FeatureVector> vectors;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> numerics(kNumericFeatureCount);
        for (auto& v : numerics) v = rng.next_double() * 6.0 - 3.0;
        vectors.push_back(standard_vector(std::move(numerics), rng.next_below(kModeCount),
                                          rng.next_below(4) == 0));
    }
    return vectors;
}

}  // namespace

// --- baseline fit and log-likelihood ------------------------------------------------

TEST_CASE("one-dimensional fit recovers the exact Gaussian landmark values") {
    const FeatureLayout layout{1, 0, false};
    const std::vector<FeatureVector> fit{FeatureVector{{0.0}}, FeatureVector{{2.0}}};
    const auto model = fit_baseline(fit, benign_labels(2), layout);

    REQUIRE(model.normalization.mean == std::vector<double>{1.0});
    REQUIRE(model.normalization.stddev == std::vector<double>{1.0});
    REQUIRE(model.densities.size() == 1);
    REQUIRE_THAT(model.densities[0].mean, WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(model.densities[0].stddev, WithinAbs(1.0, 1e-15));

    // Standard normal log-density at its mean: -0.5 * ln(2*pi).
    const auto at_mode = feature_log_likelihood(model, FeatureVector{{0.0}});
    REQUIRE(at_mode.size() == 1);
    REQUIRE_THAT(at_mode[0], WithinAbs(-0.9189385332046727, 1e-12));

    // Three standard deviations out costs exactly 4.5 nats more.
    const auto at_three_sigma = feature_log_likelihood(model, FeatureVector{{3.0}});
    REQUIRE_THAT(at_three_sigma[0], WithinAbs(-0.9189385332046727 - 4.5, 1e-12));

    // Raw anomaly at the benign mode is exactly zero; both fit points score
    // z^2/2 = 0.5, so the calibration midpoint is 0.5.
    REQUIRE(model.calibration.slope == 1.0);
    REQUIRE_THAT(model.calibration.midpoint, WithinAbs(0.5, 1e-12));
    const auto mode_score = anomaly_score(model, FeatureVector{{0.0}});
    REQUIRE(mode_score.raw == 0.0);
    REQUIRE_THAT(mode_score.calibrated, WithinAbs(logistic(-model.calibration.midpoint), 1e-15));
}

TEST_CASE("fit_baseline estimates categorical priors with Laplace smoothing") {
    const auto vectors = random_standard_vectors(9, 500);
    const auto model = fit_baseline(vectors, benign_labels(vectors.size()));

    // Recount modes and flags straight off the fit set.
    std::array<double, kModeCount> mode_counts{};
    double raised = 0.0;
    for (const auto& vec : vectors) {
        for (std::size_t m = 0; m < kModeCount; ++m) {
            if (vec[kModeOnehotIndex + m] == 1.0) mode_counts[m] += 1.0;
        }
        if (vec[kStandardLayout.dimension() - 1] == 1.0) raised += 1.0;
    }
    const double n = 500.0;
    for (std::size_t m = 0; m < kModeCount; ++m) {
        REQUIRE_THAT(model.mode_priors[m],
                     WithinAbs((mode_counts[m] + 1.0) / (n + 4.0), 1e-12));
    }
    REQUIRE_THAT(model.flag_priors[1], WithinAbs((raised + 1.0) / (n + 2.0), 1e-12));
    REQUIRE_THAT(model.flag_priors[0], WithinAbs((n - raised + 1.0) / (n + 2.0), 1e-12));

    // Densities live in normalized space: zero mean, unit spread.
    for (const auto& g : model.densities) {
        REQUIRE_THAT(g.mean, WithinAbs(0.0, 1e-9));
        REQUIRE_THAT(g.stddev, WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("anomaly raw score matches the closed-form surprisal oracle") {
    const auto model =
        fit_baseline(random_standard_vectors(9, 500), benign_labels(500));

    SplitMix64 rng(101);
    double previous_raw = -1.0;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> numerics(kNumericFeatureCount);
        for (auto& v : numerics) v = rng.next_double() * 8.0 - 4.0;
        const auto probe = standard_vector(std::move(numerics), rng.next_below(kModeCount),
                                           rng.next_below(2) == 0);
        const auto normalized = apply_normalization(probe, model.normalization);
        const auto score = anomaly_score(model, normalized);
        REQUIRE_THAT(score.raw, WithinAbs(oracle::raw_surprisal(model, normalized), 1e-9));
        REQUIRE(score.raw >= 0.0);
        REQUIRE(score.calibrated > 0.0);
        REQUIRE(score.calibrated < 1.0);
        previous_raw = score.raw;
    }
    (void)previous_raw;
}

TEST_CASE("anomaly raw score grows monotonically with deviation") {
    const auto model =
        fit_baseline(random_standard_vectors(9, 500), benign_labels(500));

    // Walk one numeric feature outward from the benign mode; everything else
    // sits at the mode.
    const std::size_t best_mode = static_cast<std::size_t>(
        std::max_element(model.mode_priors.begin(), model.mode_priors.end()) -
        model.mode_priors.begin());
    const bool best_flag = model.flag_priors[1] > model.flag_priors[0];

    double last_raw = -1.0;
    for (int k = 0; k <= 4; ++k) {
        FeatureVector probe;
        probe.values.assign(kStandardLayout.dimension(), 0.0);
        for (std::size_t i = 0; i < kNumericFeatureCount; ++i) {
            probe.values[i] = model.densities[i].mean;
        }
        probe.values[0] = model.densities[0].mean +
                          static_cast<double>(k) * model.densities[0].stddev;
        probe.values[kModeOnehotIndex + best_mode] = 1.0;
        probe.values[kStandardLayout.dimension() - 1] = best_flag ? 1.0 : 0.0;

        const auto score = anomaly_score(model, probe);
        if (k == 0) {
            REQUIRE(score.raw == 0.0);  // exactly on every benign mode
        } else {
            REQUIRE(score.raw > last_raw);
        }
        last_raw = score.raw;
    }
}

TEST_CASE("calibration preserves raw-score order and centers the fit set") {
    const auto vectors = random_standard_vectors(9, 500);
    const auto model = fit_baseline(vectors, benign_labels(vectors.size()));

    std::vector<AnomalyScore> scores;
    for (const auto& vec : vectors) {
        scores.push_back(anomaly_score(model, apply_normalization(vec, model.normalization)));
    }
    std::size_t above = 0;
    for (const auto& score : scores) {
        if (score.calibrated > 0.5) ++above;
    }
    // At most a small upper tail of the fit set calibrates above 0.5 (the
    // midpoint is a nearest-rank upper percentile), with sampling slack.
    const double bound = (1.0 - kCalibrationPercentile) + 2.0 / std::sqrt(500.0);
    REQUIRE(static_cast<double>(above) / 500.0 <= bound);

    // Order preservation: sort by raw, confirm calibrated is sorted too.
    std::sort(scores.begin(), scores.end(),
              [](const auto& a, const auto& b) { return a.raw < b.raw; });
    for (std::size_t i = 1; i < scores.size(); ++i) {
        REQUIRE(scores[i].calibrated >= scores[i - 1].calibrated);
    }
}

TEST_CASE("scaling all feature weights scales the raw score linearly") {
    const auto model =
        fit_baseline(random_standard_vectors(9, 200), benign_labels(200));
    auto scaled = model;
    const double lambda = 2.5;
    for (auto& w : scaled.feature_weights) w *= lambda;

    SplitMix64 rng(55);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> numerics(kNumericFeatureCount);
        for (auto& v : numerics) v = rng.next_double() * 8.0 - 4.0;
        const auto probe = standard_vector(std::move(numerics), rng.next_below(kModeCount),
                                           rng.next_below(2) == 0);
        const auto normalized = apply_normalization(probe, model.normalization);
        const double base = anomaly_score(model, normalized).raw;
        const double boosted = anomaly_score(scaled, normalized).raw;
        if (base == 0.0) {
            REQUIRE(boosted == 0.0);
        } else {
            REQUIRE_THAT(boosted, WithinRel(lambda * base, 1e-12));
        }
    }
}

TEST_CASE("fit_baseline rejects bad input") {
    const FeatureLayout layout{1, 0, false};
    const std::vector<FeatureVector> two{FeatureVector{{0.0}}, FeatureVector{{2.0}}};

    REQUIRE_THROWS_AS(fit_baseline({}, {}, layout), EmptyInput);
    REQUIRE_THROWS_AS(
        fit_baseline(std::vector<FeatureVector>{FeatureVector{{1.0}}},
                     benign_labels(1), layout),
        InsufficientData);

    std::vector<TruthLabel> mixed{TruthLabel::Benign, TruthLabel::Malicious};
    REQUIRE_THROWS_AS(fit_baseline(two, mixed, layout), MixedLabels);

    REQUIRE_THROWS_AS(fit_baseline(two, benign_labels(3), layout), DimensionMismatch);
    REQUIRE_THROWS_AS(fit_baseline(two, benign_labels(2), kStandardLayout),
                      DimensionMismatch);  // vectors too small for the layout

    REQUIRE_THROWS_AS(fit_baseline(two, benign_labels(2), layout, {1.0, 2.0}),
                      DimensionMismatch);  // weight count != scored terms
    REQUIRE_THROWS_AS(fit_baseline(two, benign_labels(2), layout, {-1.0}), InvalidConfig);
    REQUIRE_THROWS_AS(fit_baseline(two, benign_labels(2), layout, {0.0}), InvalidConfig);
}

// --- model serialization --------------------------------------------------------------

TEST_CASE("model serialization round-trips exactly") {
    const auto model =
        fit_baseline(random_standard_vectors(9, 100), benign_labels(100));
    const auto text = save_model(model);
    const auto loaded = load_model(text);
    REQUIRE(loaded == model);
    REQUIRE(save_model(loaded) == text);

    // Fitting the same data twice yields byte-identical documents.
    const auto again =
        fit_baseline(random_standard_vectors(9, 100), benign_labels(100));
    REQUIRE(save_model(again) == text);
}

TEST_CASE("model loader rejects malformed and foreign documents") {
    const auto model =
        fit_baseline(random_standard_vectors(9, 50), benign_labels(50));
    const auto text = save_model(model);

    REQUIRE_THROWS_AS(load_model("not json at all"), MalformedModel);
    REQUIRE_THROWS_AS(load_model("[]"), MalformedModel);
    REQUIRE_THROWS_AS(load_model("{}"), MalformedModel);
    REQUIRE_THROWS_AS(load_model(text.substr(0, text.size() / 2)), MalformedModel);

    // An unsupported future version is a version error, not a parse error.
    {
        auto doc = nlohmann::ordered_json::parse(text);
        doc["model_version"] = kModelVersion + 1;
        REQUIRE_THROWS_AS(load_model(doc.dump()), VersionMismatch);
    }
    // Structurally valid JSON with broken semantics.
    {
        auto doc = nlohmann::ordered_json::parse(text);
        doc["calibration"]["slope"] = -1.0;
        REQUIRE_THROWS_AS(load_model(doc.dump()), MalformedModel);
    }
    {
        auto doc = nlohmann::ordered_json::parse(text);
        doc["normalization"]["stddev"][0] = 0.0;
        REQUIRE_THROWS_AS(load_model(doc.dump()), MalformedModel);
    }
    {
        auto doc = nlohmann::ordered_json::parse(text);
        doc["mode_priors"][0] = 0.9;  // priors no longer sum to one
        REQUIRE_THROWS_AS(load_model(doc.dump()), MalformedModel);
    }
    {
        auto doc = nlohmann::ordered_json::parse(text);
        doc.erase("densities");
        REQUIRE_THROWS_AS(load_model(doc.dump()), MalformedModel);
    }
}

// --- clustering -------------------------------------------------------------------------

TEST_CASE("pairwise distance is a weighted Euclidean metric") {
    const FeatureVector a{{0.0}};
    const FeatureVector b{{3.0}};
    const std::vector<double> w1{1.0};
    REQUIRE(pairwise_distance(a, a, w1) == 0.0);
    REQUIRE(pairwise_distance(a, b, w1) == 3.0);
    REQUIRE(pairwise_distance(b, a, w1) == 3.0);

    const FeatureVector p{{0.0, 0.0}};
    const FeatureVector q{{1.0, 1.0}};
    const std::vector<double> w2{4.0, 9.0};
    REQUIRE_THAT(pairwise_distance(p, q, w2), WithinAbs(std::sqrt(13.0), 1e-15));

    REQUIRE_THROWS_AS(pairwise_distance(a, p, w2), DimensionMismatch);
    REQUIRE_THROWS_AS(pairwise_distance(p, q, w1), DimensionMismatch);

    // Triangle inequality on random triples.
    SplitMix64 rng(61);
    for (int i = 0; i < 100; ++i) {
        const FeatureVector x{{rng.next_double(), rng.next_double()}};
        const FeatureVector y{{rng.next_double(), rng.next_double()}};
        const FeatureVector z{{rng.next_double(), rng.next_double()}};
        const std::vector<double> w{0.5 + rng.next_double(), 0.5 + rng.next_double()};
        REQUIRE(pairwise_distance(x, z, w) <=
                pairwise_distance(x, y, w) + pairwise_distance(y, z, w) + 1e-12);
    }
}

TEST_CASE("agglomerate handles the trivial sizes") {
    REQUIRE_THROWS_AS(agglomerate({}, {}), EmptyInput);

    const std::vector<FeatureVector> one{FeatureVector{{1.0}}};
    const std::vector<double> w{1.0};
    const auto single = agglomerate(one, w);
    REQUIRE(single.leaf_count == 1);
    REQUIRE(single.merges.empty());

    const std::vector<FeatureVector> two{FeatureVector{{1.0}}, FeatureVector{{4.0}}};
    const auto pair = agglomerate(two, w);
    REQUIRE(pair.merges.size() == 1);
    REQUIRE(pair.merges[0].left == 0);
    REQUIRE(pair.merges[0].right == 1);
    REQUIRE(pair.merges[0].distance == 3.0);
}

TEST_CASE("agglomerate separates two tight pairs across a wide gap") {
    const std::vector<FeatureVector> quartet{
        FeatureVector{{0.0}}, FeatureVector{{0.1}}, FeatureVector{{10.0}},
        FeatureVector{{10.1}}};
    const std::vector<double> w{1.0};
    const auto dendrogram = agglomerate(quartet, w);

    REQUIRE(dendrogram.leaf_count == 4);
    REQUIRE(dendrogram.merges.size() == 3);
    // The two within-pair merges happen first (both near 0.1), then the pairs
    // join at the mean cross distance of exactly 10.
    REQUIRE_THAT(dendrogram.merges[0].distance, WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(dendrogram.merges[1].distance, WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(dendrogram.merges[2].distance, WithinAbs(10.0, 1e-9));

    const auto clusters = cut_dendrogram(dendrogram, 1.0);
    REQUIRE(clusters == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}});

    REQUIRE(cut_dendrogram(dendrogram, 0.0) ==
            std::vector<std::vector<std::size_t>>{{0}, {1}, {2}, {3}});
    REQUIRE(cut_dendrogram(dendrogram, 1e9) ==
            std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}});
}

TEST_CASE("exact distance ties break toward lower member ids") {
    // Three coincident points and one outlier: every early distance ties at
    // zero, so the documented (lowest member, then larger lowest member) rule
    // fully determines the sequence.
    const std::vector<FeatureVector> points{FeatureVector{{0.0}}, FeatureVector{{0.0}},
                                            FeatureVector{{0.0}}, FeatureVector{{1.0}}};
    const std::vector<double> w{1.0};
    const auto dendrogram = agglomerate(points, w);
    REQUIRE(dendrogram.merges ==
            std::vector<MergeStep>{{0, 1, 0.0}, {4, 2, 0.0}, {5, 3, 1.0}});

    // Dyadic spacing keeps every average exact, so the oracle must agree on
    // the tie decisions bit for bit.
    const std::vector<FeatureVector> dyadic{FeatureVector{{0.0}},  FeatureVector{{1.0}},
                                            FeatureVector{{4.0}},  FeatureVector{{5.0}},
                                            FeatureVector{{16.0}}, FeatureVector{{17.0}}};
    const auto got = agglomerate(dyadic, w);
    const auto expected = oracle::average_linkage(dyadic, w);
    REQUIRE(got.merges == expected.merges);
    REQUIRE(got.merges[0] == MergeStep{0, 1, 1.0});  // tie at 1.0 resolved low-first
    REQUIRE(got.merges[1] == MergeStep{2, 3, 1.0});
    REQUIRE(got.merges.back().distance == 14.0);
}

TEST_CASE("agglomerate reproduces the brute-force merge sequence") {
    SplitMix64 rng(71);
    for (int instance = 0; instance < 60; ++instance) {
        const std::size_t n = 2 + rng.next_below(9);
        const std::size_t dim = 1 + rng.next_below(3);
        std::vector<double> weights(dim);
        for (auto& w : weights) w = 0.1 + rng.next_double() * 1.9;

        std::vector<FeatureVector> vectors;
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && rng.next_below(5) == 0) {
                vectors.push_back(vectors[rng.next_below(i)]);  // exact duplicate
                continue;
            }
            FeatureVector vec;
            for (std::size_t d = 0; d < dim; ++d) {
                vec.values.push_back(rng.next_double() * 10.0);
            }
            vectors.push_back(std::move(vec));
        }

        const auto got = agglomerate(vectors, weights);
        const auto expected = oracle::average_linkage(vectors, weights);
        REQUIRE(got.leaf_count == expected.leaf_count);
        REQUIRE(got.merges.size() == expected.merges.size());
        for (std::size_t i = 0; i < got.merges.size(); ++i) {
            INFO("instance " << instance << " merge " << i);
            REQUIRE(got.merges[i].left == expected.merges[i].left);
            REQUIRE(got.merges[i].right == expected.merges[i].right);
            REQUIRE_THAT(got.merges[i].distance,
                         WithinAbs(expected.merges[i].distance, 1e-9));
        }

        // Replay the cut at several depths and cross-check the partitions.
        std::vector<double> cuts{0.0, 1e9};
        for (const auto& merge : got.merges) cuts.push_back(merge.distance * 1.0001);
        for (const auto cut : cuts) {
            const auto partition = cut_dendrogram(got, cut);
            REQUIRE(partition == oracle::replay_cut(got, cut));

            // Partition property: every leaf appears exactly once.
            std::set<std::size_t> seen;
            std::size_t total = 0;
            for (const auto& cluster : partition) {
                for (const auto leaf : cluster) {
                    seen.insert(leaf);
                    ++total;
                }
            }
            REQUIRE(total == n);
            REQUIRE(seen.size() == n);
        }
    }
}

TEST_CASE("scaling weights scales distances without reordering merges") {
    SplitMix64 rng(73);
    std::vector<FeatureVector> vectors;
    for (int i = 0; i < 8; ++i) {
        vectors.push_back(FeatureVector{{rng.next_double() * 5.0, rng.next_double() * 5.0}});
    }
    const std::vector<double> weights{1.0, 2.0};
    const double lambda = 4.0;  // scales every distance by exactly 2
    const std::vector<double> scaled{lambda * weights[0], lambda * weights[1]};

    const auto base = agglomerate(vectors, weights);
    const auto boosted = agglomerate(vectors, scaled);
    REQUIRE(base.merges.size() == boosted.merges.size());
    for (std::size_t i = 0; i < base.merges.size(); ++i) {
        REQUIRE(base.merges[i].left == boosted.merges[i].left);
        REQUIRE(base.merges[i].right == boosted.merges[i].right);
        REQUIRE_THAT(boosted.merges[i].distance,
                     WithinRel(2.0 * base.merges[i].distance, 1e-12));
    }
}

TEST_CASE("cut replay skips merges whose operands never formed") {
    // Hand-built merge list: the first merge is too distant to execute, which
    // strands both later merges that reference its result.
    Dendrogram dendrogram;
    dendrogram.leaf_count = 4;
    dendrogram.merges = {{0, 1, 5.0}, {4, 2, 1.0}, {5, 3, 2.0}};

    REQUIRE(cut_dendrogram(dendrogram, 3.0) ==
            std::vector<std::vector<std::size_t>>{{0}, {1}, {2}, {3}});
    REQUIRE(cut_dendrogram(dendrogram, 5.5) ==
            std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}});
    // The cut is strict: a merge exactly at the cut does not execute.
    REQUIRE(cut_dendrogram(dendrogram, 5.0) ==
            std::vector<std::vector<std::size_t>>{{0}, {1}, {2}, {3}});

    REQUIRE(cut_dendrogram(Dendrogram{}, 1.0).empty());
}

// --- verdict codec ------------------------------------------------------------------------

TEST_CASE("verdict codec round-trips and rejects malformed lines") {
    const Verdict verdict{42, 7, 0.625, TruthLabel::Malicious, 12000};
    REQUIRE(decode_verdict(encode_verdict(verdict)) == verdict);

    const std::vector<Verdict> batch{verdict, {43, 7, 0.25, TruthLabel::Benign, 12000}};
    REQUIRE(decode_verdicts(encode_verdicts(batch)) == batch);

    REQUIRE_THROWS_AS(decode_verdict("nope"), MalformedRecord);
    REQUIRE_THROWS_AS(decode_verdict("[]"), MalformedRecord);
    {
        auto doc = nlohmann::ordered_json::parse(encode_verdict(verdict));
        doc["confidence"] = 1.0;
        REQUIRE_THROWS_AS(decode_verdict(doc.dump()), MalformedRecord);
    }
    {
        auto doc = nlohmann::ordered_json::parse(encode_verdict(verdict));
        doc.erase("score");
        REQUIRE_THROWS_AS(decode_verdict(doc.dump()), MalformedRecord);
    }
    {
        auto doc = nlohmann::ordered_json::parse(encode_verdict(verdict));
        doc["label"] = "suspicious";
        REQUIRE_THROWS_AS(decode_verdict(doc.dump()), MalformedRecord);
    }
    REQUIRE_THROWS_AS(decode_verdicts("\n"), MalformedRecord);

    const auto dir = std::filesystem::temp_directory_path() / "cryptoprint-verdict-test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "verdicts.jsonl").string();
    write_verdicts_file(path, batch);
    REQUIRE(read_verdicts_file(path) == batch);
    std::filesystem::remove_all(dir);
}

// --- cluster scoring and classification ------------------------------------------------------

TEST_CASE("score_clusters averages member calibrated scores") {
    const std::vector<std::vector<std::size_t>> partition{{0}, {1, 2}};
    const std::vector<double> calibrated{0.2, 0.4, 0.6};
    const auto scores = score_clusters(partition, calibrated);
    REQUIRE(scores.size() == 2);
    REQUIRE(scores[0] == 0.2);
    REQUIRE(scores[1] == 0.5);

    const std::vector<std::vector<std::size_t>> empty_member{{}};
    REQUIRE_THROWS_AS(score_clusters(empty_member, calibrated), EmptyInput);
    const std::vector<std::vector<std::size_t>> out_of_range{{5}};
    REQUIRE_THROWS_AS(score_clusters(out_of_range, calibrated), DimensionMismatch);
}

TEST_CASE("classify_clusters applies an inclusive threshold clusterwise") {
    Cluster hot;
    hot.member_event_ids = {10, 11};
    hot.member_indices = {0, 1};
    hot.cluster_score = 0.5;
    Cluster cold;
    cold.member_event_ids = {12};
    cold.member_indices = {2};
    cold.cluster_score = 0.4999;
    const std::vector<Cluster> clusters{hot, cold};
    const std::vector<double> calibrated{0.9, 0.1, 0.4999};

    const auto verdicts = classify_clusters(clusters, calibrated, 0.5, 4000, 7);
    REQUIRE(verdicts.size() == 3);
    // A cluster exactly at theta is malicious, and members inherit the
    // cluster label while keeping their own scores.
    REQUIRE(verdicts[0] == Verdict{10, 7, 0.9, TruthLabel::Malicious, 4000});
    REQUIRE(verdicts[1] == Verdict{11, 7, 0.1, TruthLabel::Malicious, 4000});
    REQUIRE(verdicts[2] == Verdict{12, 8, 0.4999, TruthLabel::Benign, 4000});

    REQUIRE(classify_clusters({}, calibrated, 0.5, 0).empty());

    Cluster bad;
    bad.member_event_ids = {1};
    bad.member_indices = {9};
    REQUIRE_THROWS_AS(classify_clusters(std::vector<Cluster>{bad}, calibrated, 0.5, 0),
                      DimensionMismatch);
}

// --- threshold feedback -------------------------------------------------------------------------

TEST_CASE("update_threshold follows the proportional feedback rule") {
    ThresholdState state;
    state.theta = 0.5;
    state.eta = 0.1;
    state.fpr_target = 0.02;

    const auto next = update_threshold(state, 0.12, 3);
    REQUIRE_THAT(next.theta, WithinAbs(0.505, 1e-12));
    REQUIRE(next.history == decltype(next.history){{3, 0.12}});

    // Observed exactly at target: no movement at all.
    const auto steady = update_threshold(state, 0.02, 4);
    REQUIRE(steady.theta == 0.5);

    // Observed below target lowers theta.
    const auto lowered = update_threshold(state, 0.0, 5);
    REQUIRE(lowered.theta < 0.5);
    REQUIRE_THAT(lowered.theta, WithinAbs(0.5 * (1.0 - 0.1 * 0.02), 1e-12));

    REQUIRE_THROWS_AS(update_threshold(state, 1.5), InvalidConfig);
    REQUIRE_THROWS_AS(update_threshold(state, -0.1), InvalidConfig);
}

TEST_CASE("update_threshold clamps to its operating band") {
    ThresholdState low;
    low.theta = 0.06;
    low.eta = 1.0;
    low.fpr_target = 1.0;
    REQUIRE(update_threshold(low, 0.0).theta == kThetaMin);

    ThresholdState high;
    high.theta = 0.98;
    high.eta = 1.0;
    high.fpr_target = 0.0;
    REQUIRE(update_threshold(high, 1.0).theta == kThetaMax);
}

TEST_CASE("update_threshold keeps a bounded history window") {
    ThresholdState state;
    for (std::uint64_t w = 0; w < 200; ++w) {
        state = update_threshold(state, 0.02, w);
    }
    REQUIRE(state.history.size() == kThresholdHistoryCap);
    REQUIRE(state.history.front().first == 200 - kThresholdHistoryCap);
    REQUIRE(state.history.back().first == 199);
}

TEST_CASE("component_weights expands per-term weights onto components") {
    auto model = fit_baseline(random_standard_vectors(9, 50), benign_labels(50));
    model.feature_weights = {1, 2, 3, 4, 5, 6, 7, 8};
    const auto weights = component_weights(model);
    REQUIRE(weights == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 7, 7, 7, 8});
}

// --- windowed detection --------------------------------------------------------------------------

namespace {

// Shared fixture: a simulated mixed stream, a model fit on its benign
// warmup, and the held-out remainder.
struct StreamFixture {
    std::vector<EncryptionEvent> events;
    std::vector<EncryptionEvent> eval_events;
    FootprintModel model;
};

const StreamFixture& stream_fixture() {
    static const StreamFixture fixture = [] {
        StreamFixture f;
        auto scenario = synth::preset_scenarios("baseline").front().config;
        scenario.seed = 21;
        f.events = synth::generate_scenario(scenario);
        std::int64_t t_cut = 0;
        f.model = exp::fit_from_stream(f.events, FeatureConfig{}, 0.3, &t_cut);
        for (const auto& event : f.events) {
            if (event.arrived_at_ms > t_cut) f.eval_events.push_back(event);
        }
        return f;
    }();
    return fixture;
}

}  // namespace

TEST_CASE("window close lands on the smallest enclosing multiple") {
    REQUIRE(detail::window_close(0, 2000) == 0);
    REQUIRE(detail::window_close(1, 2000) == 2000);
    REQUIRE(detail::window_close(1999, 2000) == 2000);
    REQUIRE(detail::window_close(2000, 2000) == 2000);
    REQUIRE(detail::window_close(2001, 2000) == 4000);
    REQUIRE(detail::window_close(-1, 2000) == 0);
    REQUIRE(detail::window_close(-2000, 2000) == -2000);
}

TEST_CASE("detect_stream handles the empty stream") {
    const auto& f = stream_fixture();
    const auto result = detect_stream({}, f.model);
    REQUIRE(result.verdicts.empty());
    REQUIRE(result.clusters.empty());
    REQUIRE(result.skipped.empty());
    REQUIRE(result.window_count == 0);
    REQUIRE(result.threshold.theta == kDefaultTheta);
}

TEST_CASE("detect_stream stamps verdicts with the window close") {
    const auto& f = stream_fixture();
    const std::vector<EncryptionEvent> one{f.eval_events.front()};
    const auto result = detect_stream(one, f.model);
    REQUIRE(result.verdicts.size() == 1);
    REQUIRE(result.window_count == 1);
    REQUIRE(result.verdicts[0].event_id == one[0].event_id);
    REQUIRE(result.verdicts[0].detected_at_ms ==
            detail::window_close(one[0].arrived_at_ms, 2000));
    REQUIRE(result.verdicts[0].score > 0.0);
    REQUIRE(result.verdicts[0].score < 1.0);
}

TEST_CASE("detect_stream rejects unordered arrivals") {
    const auto& f = stream_fixture();
    std::vector<EncryptionEvent> twisted{f.eval_events[1], f.eval_events[0]};
    twisted[0].arrived_at_ms = 5000;
    twisted[1].arrived_at_ms = 4000;
    REQUIRE_THROWS_AS(detect_stream(twisted, f.model), UnorderedInput);
}

TEST_CASE("detect_stream skips invalid events but keeps the stream alive") {
    const auto& f = stream_fixture();
    std::vector<EncryptionEvent> events(f.eval_events.begin(), f.eval_events.begin() + 6);
    events[2].crypto.key_length_bits = 99;  // invalid
    events[4].byte_sample.clear();          // unscoreable

    const auto result = detect_stream(events, f.model);
    REQUIRE(result.skipped.size() == 2);
    REQUIRE(result.skipped[0].event_id == events[2].event_id);
    REQUIRE(result.skipped[1].event_id == events[4].event_id);
    REQUIRE_FALSE(result.skipped[0].reason.empty());
    REQUIRE(result.verdicts.size() == 4);

    // Every surviving event got exactly one verdict.
    std::set<std::uint64_t> verdict_ids;
    for (const auto& verdict : result.verdicts) verdict_ids.insert(verdict.event_id);
    REQUIRE(verdict_ids.size() == 4);
    REQUIRE(verdict_ids.count(events[2].event_id) == 0);
    REQUIRE(verdict_ids.count(events[4].event_id) == 0);
}

TEST_CASE("detect_stream emits one verdict per event within the latency bound") {
    const auto& f = stream_fixture();
    const auto result = detect_stream(f.eval_events, f.model);

    REQUIRE(result.skipped.empty());
    REQUIRE(result.verdicts.size() == f.eval_events.size());

    std::map<std::uint64_t, const EncryptionEvent*> by_id;
    for (const auto& event : f.eval_events) by_id[event.event_id] = &event;

    for (std::size_t i = 0; i < result.verdicts.size(); ++i) {
        const auto& verdict = result.verdicts[i];
        // Verdicts come back in arrival order.
        REQUIRE(verdict.event_id == f.eval_events[i].event_id);
        const auto* event = by_id.at(verdict.event_id);
        const auto lag = verdict.detected_at_ms - event->arrived_at_ms;
        REQUIRE(lag >= 0);
        REQUIRE(lag < 2000);
    }

    // Deterministic replay.
    const auto again = detect_stream(f.eval_events, f.model);
    REQUIRE(again.verdicts == result.verdicts);
    REQUIRE(again.window_count == result.window_count);
}

TEST_CASE("detect_stream equals the manually composed stage pipeline") {
    const auto& f = stream_fixture();
    DetectorConfig config;  // defaults, feedback off
    const auto result = detect_stream(f.eval_events, f.model, config);

    // Re-run the documented pipeline stage by stage: window by arrival,
    // validate, extract, normalize, score, cluster, cut, average, classify.
    const auto weights = component_weights(f.model);
    std::vector<Verdict> expected;
    std::uint64_t next_cluster_id = 0;
    std::size_t window_count = 0;

    std::size_t begin = 0;
    while (begin < f.eval_events.size()) {
        const auto close =
            detail::window_close(f.eval_events[begin].arrived_at_ms, config.features.window_ms);
        std::vector<EncryptionEvent> window;
        std::size_t end = begin;
        while (end < f.eval_events.size() && f.eval_events[end].arrived_at_ms <= close) {
            window.push_back(f.eval_events[end]);
            ++end;
        }
        begin = end;
        ++window_count;

        std::vector<FeatureVector> normalized;
        std::vector<double> calibrated;
        for (const auto& event : window) {
            const auto vec = extract_features(event, window, config.features);
            auto norm = apply_normalization(vec, f.model.normalization, f.model.layout);
            calibrated.push_back(anomaly_score(f.model, norm).calibrated);
            normalized.push_back(std::move(norm));
        }
        const auto partition =
            cut_dendrogram(agglomerate(normalized, weights), config.cut_distance);
        const auto scores = score_clusters(partition, calibrated);

        std::vector<Cluster> clusters;
        for (std::size_t c = 0; c < partition.size(); ++c) {
            Cluster cluster;
            cluster.member_indices = partition[c];
            for (const auto index : partition[c]) {
                cluster.member_event_ids.push_back(window[index].event_id);
            }
            cluster.cluster_score = scores[c];
            clusters.push_back(std::move(cluster));
        }
        auto window_verdicts = classify_clusters(clusters, calibrated,
                                                 config.initial_theta, close, next_cluster_id);
        next_cluster_id += clusters.size();

        // classify_clusters emits clusterwise; detect_stream reports arrival
        // order, so re-sort by window position before appending.
        std::vector<std::pair<std::size_t, Verdict>> positioned;
        for (std::size_t c = 0, v = 0; c < clusters.size(); ++c) {
            for (const auto index : clusters[c].member_indices) {
                positioned.emplace_back(index, window_verdicts[v++]);
            }
        }
        std::sort(positioned.begin(), positioned.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [index, verdict] : positioned) expected.push_back(verdict);
    }

    REQUIRE(result.window_count == window_count);
    REQUIRE(result.verdicts == expected);
    REQUIRE(result.threshold.theta == config.initial_theta);  // feedback off
    REQUIRE(result.threshold.history.empty());
}

TEST_CASE("raising theta never flips a verdict toward malicious") {
    const auto& f = stream_fixture();
    DetectorConfig strict;
    strict.initial_theta = 0.9;
    DetectorConfig lax;
    lax.initial_theta = 0.5;

    const auto strict_result = detect_stream(f.eval_events, f.model, strict);
    const auto lax_result = detect_stream(f.eval_events, f.model, lax);
    REQUIRE(strict_result.verdicts.size() == lax_result.verdicts.size());
    for (std::size_t i = 0; i < strict_result.verdicts.size(); ++i) {
        if (strict_result.verdicts[i].label == TruthLabel::Malicious) {
            REQUIRE(lax_result.verdicts[i].label == TruthLabel::Malicious);
        }
    }
}

TEST_CASE("feedback adjusts the threshold from observed window FPR") {
    // Fit a baseline that has only ever seen text traffic...
    synth::ScenarioConfig text_only;
    text_only.seed = 33;
    text_only.duration_ms = 40000;
    text_only.benign_mix = {{{FileType::Text, 4096, 65536}, 1.0, 4.0}};
    text_only.latency_jitter = {0, 0};
    const auto warmup = synth::generate_scenario(text_only);
    const auto model = exp::fit_from_stream(warmup, FeatureConfig{}, 1.0);

    // ...then present one window of wildly different benign traffic. Every
    // event is a false positive, so the observed FPR is 1.0 and the
    // threshold takes exactly one proportional step up.
    std::vector<EncryptionEvent> window;
    for (std::uint64_t i = 0; i < 3; ++i) {
        auto event = testsupport::make_event(9000 + i, 100000 + static_cast<std::int64_t>(i));
        event.byte_sample = prng_stream(400 + i, 8192);
        event.file_size_bytes = 8192;
        event.crypto.mode = CipherMode::Gcm;
        event.crypto.handshake_irregular = true;
        window.push_back(event);
    }

    DetectorConfig config;
    config.feedback = true;
    const auto result = detect_stream(window, model, config);

    REQUIRE(result.verdicts.size() == 3);
    for (const auto& verdict : result.verdicts) {
        REQUIRE(verdict.label == TruthLabel::Malicious);
    }
    REQUIRE(result.threshold.history.size() == 1);
    REQUIRE(result.threshold.history[0].second == 1.0);
    REQUIRE_THAT(result.threshold.theta,
                 WithinAbs(0.5 * (1.0 + 0.1 * (1.0 - 0.02)), 1e-12));

    // Feedback disabled leaves the threshold untouched on the same input.
    DetectorConfig frozen;
    frozen.feedback = false;
    REQUIRE(detect_stream(window, model, frozen).threshold.theta == 0.5);
}

TEST_CASE("detector config is validated up front") {
    const auto& f = stream_fixture();
    DetectorConfig config;
    config.cut_distance = -1.0;
    REQUIRE_THROWS_AS(detect_stream(f.eval_events, f.model, config), InvalidConfig);
    config = DetectorConfig{};
    config.initial_theta = 1.5;
    REQUIRE_THROWS_AS(detect_stream(f.eval_events, f.model, config), InvalidConfig);
    config = DetectorConfig{};
    config.features.window_ms = 0;
    REQUIRE_THROWS_AS(detect_stream(f.eval_events, f.model, config), InvalidConfig);
}
