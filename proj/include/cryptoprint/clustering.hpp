// Agglomerative average-linkage clustering over feature vectors, recorded as
// an ordered merge list (dendrogram) that can be cut at any distance.
//
// Cluster identity follows the usual convention: the n input vectors are
// leaves 0..n-1, and the cluster created by merge step i is n+i. At every
// step the pair with minimal mean pairwise member distance merges; exact
// distance ties are broken deterministically by the pair's smaller lowest
// member id, then by its larger lowest member id. Distances use the
// Lance-Williams average-linkage update,
//
//   d(k, i+j) = (|i| * d(k,i) + |j| * d(k,j)) / (|i| + |j|)
//
// which reproduces the mean of all member-pair distances.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cryptoprint/errors.hpp"
#include "cryptoprint/features.hpp"

namespace cryptoprint {

struct MergeStep {
    std::size_t left = 0;      // cluster id with the smaller lowest member
    std::size_t right = 0;     // the other cluster id
    double distance = 0.0;     // average linkage distance at merge time

    bool operator==(const MergeStep&) const = default;
};

struct Dendrogram {
    std::size_t leaf_count = 0;
    std::vector<MergeStep> merges;  // exactly leaf_count - 1 entries (none for a single leaf)

    bool operator==(const Dendrogram&) const = default;
};

// Weighted Euclidean distance: sqrt(sum_i w_i * (a_i - b_i)^2).
inline double pairwise_distance(const FeatureVector& a, const FeatureVector& b,
                                std::span<const double> weights) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("pairwise_distance: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    if (weights.size() != a.size()) {
        throw DimensionMismatch("pairwise_distance: weight count " +
                                std::to_string(weights.size()) + " vs vector size " +
                                std::to_string(a.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += weights[i] * d * d;
    }
    return std::sqrt(sum);
}

inline Dendrogram agglomerate(std::span<const FeatureVector> vectors,
                              std::span<const double> weights) {
    const std::size_t n = vectors.size();
    if (n == 0) throw EmptyInput("agglomerate requires vectors");

    Dendrogram dendrogram;
    dendrogram.leaf_count = n;
    if (n == 1) return dendrogram;

    // Dense distance matrix over active slots. Slot s starts as leaf s and is
    // reused for the merged cluster (the partner slot dies).
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = pairwise_distance(vectors[i], vectors[j], weights);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    struct Slot {
        bool active = true;
        std::size_t cluster_id = 0;
        std::size_t size = 1;
        std::size_t lowest_member = 0;
    };
    std::vector<Slot> slots(n);
    for (std::size_t s = 0; s < n; ++s) {
        slots[s].cluster_id = s;
        slots[s].lowest_member = s;
    }

    dendrogram.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        // Minimal pair; ties by (smaller lowest member, larger lowest member).
        std::size_t best_i = n, best_j = n;
        double best_d = std::numeric_limits<double>::infinity();
        std::size_t best_low = 0, best_high = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!slots[i].active) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!slots[j].active) continue;
                const double d = dist[i * n + j];
                const std::size_t low = std::min(slots[i].lowest_member, slots[j].lowest_member);
                const std::size_t high = std::max(slots[i].lowest_member, slots[j].lowest_member);
                const bool better =
                    d < best_d ||
                    (d == best_d && (low < best_low || (low == best_low && high < best_high)));
                if (better) {
                    best_d = d;
                    best_i = i;
                    best_j = j;
                    best_low = low;
                    best_high = high;
                }
            }
        }

        Slot& a = slots[best_i];
        Slot& b = slots[best_j];
        const bool a_is_left = a.lowest_member < b.lowest_member;
        dendrogram.merges.push_back({a_is_left ? a.cluster_id : b.cluster_id,
                                     a_is_left ? b.cluster_id : a.cluster_id, best_d});

        // Lance-Williams update into slot best_i.
        const double na = static_cast<double>(a.size);
        const double nb = static_cast<double>(b.size);
        for (std::size_t k = 0; k < n; ++k) {
            if (!slots[k].active || k == best_i || k == best_j) continue;
            const double d = (na * dist[best_i * n + k] + nb * dist[best_j * n + k]) / (na + nb);
            dist[best_i * n + k] = d;
            dist[k * n + best_i] = d;
        }
        a.cluster_id = n + step;
        a.size += b.size;
        a.lowest_member = std::min(a.lowest_member, b.lowest_member);
        b.active = false;
    }
    return dendrogram;
}

// Replays the merge list: a merge executes iff its recorded distance is
// strictly below the cut AND both its operands still exist (i.e. each operand
// is a leaf or was created by an executed merge). Returns the final clusters
// as leaf-index lists, each sorted ascending, ordered by lowest member.
// cut 0 yields all singletons; cut +infinity yields one cluster.
inline std::vector<std::vector<std::size_t>> cut_dendrogram(const Dendrogram& dendrogram,
                                                            double cut_distance) {
    const std::size_t n = dendrogram.leaf_count;
    if (n == 0) return {};

    std::vector<bool> executed(dendrogram.merges.size(), false);
    const auto available = [&](std::size_t id) {
        return id < n ? true : executed[id - n];
    };

    // members[id - n] holds the leaf set of internal cluster id once built.
    std::vector<std::vector<std::size_t>> members(dendrogram.merges.size());
    std::vector<bool> consumed_leaf(n, false);
    std::vector<bool> consumed_internal(dendrogram.merges.size(), false);

    const auto take = [&](std::size_t id) {
        if (id < n) {
            consumed_leaf[id] = true;
            return std::vector<std::size_t>{id};
        }
        consumed_internal[id - n] = true;
        return std::move(members[id - n]);
    };

    for (std::size_t i = 0; i < dendrogram.merges.size(); ++i) {
        const auto& merge = dendrogram.merges[i];
        if (!(merge.distance < cut_distance)) continue;
        if (!available(merge.left) || !available(merge.right)) continue;
        auto merged = take(merge.left);
        auto right = take(merge.right);
        merged.insert(merged.end(), right.begin(), right.end());
        std::sort(merged.begin(), merged.end());
        members[i] = std::move(merged);
        executed[i] = true;
    }

    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        if (!consumed_leaf[leaf]) clusters.push_back({leaf});
    }
    for (std::size_t i = 0; i < dendrogram.merges.size(); ++i) {
        if (executed[i] && !consumed_internal[i]) clusters.push_back(std::move(members[i]));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return clusters;
}

}  // namespace cryptoprint
