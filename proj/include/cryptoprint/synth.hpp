// Deterministic workload synthesis: benign file payloads (text, image,
// compressed), ransomware-style encrypted payloads with configurable
// footprint artifacts, and full labeled event scenarios.
//
// Everything here is a pure function of (parameters, seed). Each event of a
// scenario draws its randomness from child_seed(scenario_seed, event_id), so
// streams are reproducible event by event and insensitive to generation
// order.
//
// Payload families:
//   text        letter/space soup from the quantized English frequency
//               table below (~4.1 bits/byte)
//   image       banded gradients with per-region noise mixing (~6.5-7.5)
//   compressed  uniform pseudo-random bytes with a small biased-byte overlay
//               (~7.9-8.0)
//   ransomware  uniform keystream, plus footprint artifacts: a fixed 16-byte
//               marker every marker_period bytes and low-entropy pad runs at
//               low_entropy_pad_ratio. Artifact intensity scales with
//               1 - 0.5 * subtlety, where subtlety s = (key_length_bits -
//               128)/384: longer keys leave fainter footprints.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cryptoprint/codec.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"
#include "cryptoprint/prng.hpp"

namespace cryptoprint::synth {

// --- family parameters ----------------------------------------------------

enum class KeyReuseMode : std::uint8_t { SingleKey, PerFileKey };

inline constexpr std::array<std::string_view, 2> kKeyReuseTokens{"single-key", "per-file-key"};

inline std::string_view to_token(KeyReuseMode mode) {
    return kKeyReuseTokens[static_cast<std::size_t>(mode)];
}

struct FamilyParams {
    std::string family;
    std::uint32_t key_length_bits = 256;
    double events_per_second = 2.0;         // encryption speed
    KeyReuseMode key_reuse_mode = KeyReuseMode::PerFileKey;
    std::uint64_t marker_period = 4096;     // 0 disables markers
    double low_entropy_pad_ratio = 0.02;    // in [0, 0.1]

    double subtlety() const {
        return (static_cast<double>(key_length_bits) - 128.0) / 384.0;
    }
    double artifact_intensity() const { return 1.0 - 0.5 * subtlety(); }

    bool operator==(const FamilyParams&) const = default;
};

// Probability that a malicious event shows an irregular key-exchange
// handshake, before intensity scaling. Benign events never do.
inline constexpr double kHandshakeIrregularBase = 0.3;

// Ransomware payloads must be at least this large (marker spacing semantics).
inline constexpr std::uint64_t kMinRansomwarePayload = 65536;

// Pad-run geometry: runs of up to kPadRunBytes * intensity, at most
// kMaxPadRuns runs per payload. The run cap means large payloads carry a
// proportionally smaller artifact fraction, so their block-entropy profile is
// more stable.
inline constexpr std::uint64_t kPadRunBytes = 2048;
inline constexpr std::uint64_t kMaxPadRuns = 32;

// Fixed 16-byte marker and the repeating 16-byte pad pattern (16 distinct
// byte values, 4 bits/byte).
inline constexpr std::array<std::uint8_t, 16> kMarkerBytes{
    0xC3, 0x7E, 0x19, 0xA4, 0x5B, 0xE8, 0x2D, 0x90,
    0x46, 0xF1, 0x0C, 0x67, 0xB2, 0x3F, 0x8A, 0xD5};
inline constexpr std::array<std::uint8_t, 16> kPadPattern{
    0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77,
    0x88, 0x99, 0xAA, 0xBB, 0xCC, 0xDD, 0xEE, 0xFF};

inline void validate_family_params(const FamilyParams& params) {
    if (params.family.empty()) throw InvalidConfig("family", "must be non-empty");
    if (!is_valid_key_length(params.key_length_bits)) {
        throw InvalidConfig("key_length_bits", "must be one of 128/192/256/384/512");
    }
    if (!(params.events_per_second > 0.0)) {
        throw InvalidConfig("events_per_second", "must be > 0");
    }
    if (params.marker_period != 0 && params.marker_period < 256) {
        throw InvalidConfig("marker_period", "must be 0 or >= 256");
    }
    if (!(params.low_entropy_pad_ratio >= 0.0 && params.low_entropy_pad_ratio <= 0.1)) {
        throw InvalidConfig("low_entropy_pad_ratio", "must lie in [0, 0.1]");
    }
}

// Cipher and mode each family reports, plus its nominal behavior knobs.
// (Speed, key handling, marker cadence, and pad ratio differ per family.)
inline FamilyParams family_preset(std::string_view name) {
    FamilyParams p;
    p.family = std::string(name);
    if (name == "lockbit") {
        p.key_length_bits = 256; p.events_per_second = 5.0;
        p.key_reuse_mode = KeyReuseMode::SingleKey;
        p.marker_period = 4096; p.low_entropy_pad_ratio = 0.02;
    } else if (name == "hive") {
        p.key_length_bits = 256; p.events_per_second = 3.0;
        p.key_reuse_mode = KeyReuseMode::PerFileKey;
        p.marker_period = 2048; p.low_entropy_pad_ratio = 0.04;
    } else if (name == "conti") {
        p.key_length_bits = 128; p.events_per_second = 2.0;
        p.key_reuse_mode = KeyReuseMode::PerFileKey;
        p.marker_period = 8192; p.low_entropy_pad_ratio = 0.05;
    } else if (name == "blackcat") {
        p.key_length_bits = 384; p.events_per_second = 4.0;
        p.key_reuse_mode = KeyReuseMode::PerFileKey;
        p.marker_period = 4096; p.low_entropy_pad_ratio = 0.03;
    } else if (name == "royal") {
        p.key_length_bits = 256; p.events_per_second = 2.5;
        p.key_reuse_mode = KeyReuseMode::PerFileKey;
        p.marker_period = 2048; p.low_entropy_pad_ratio = 0.04;
    } else if (name == "blackbyte") {
        p.key_length_bits = 128; p.events_per_second = 6.0;
        p.key_reuse_mode = KeyReuseMode::SingleKey;
        p.marker_period = 2048; p.low_entropy_pad_ratio = 0.03;
    } else if (name == "quantumlocker") {
        p.key_length_bits = 256; p.events_per_second = 8.0;
        p.key_reuse_mode = KeyReuseMode::PerFileKey;
        p.marker_period = 1024; p.low_entropy_pad_ratio = 0.05;
    } else if (name == "medusalocker") {
        p.key_length_bits = 512; p.events_per_second = 1.5;
        p.key_reuse_mode = KeyReuseMode::PerFileKey;
        p.marker_period = 0; p.low_entropy_pad_ratio = 0.06;
    } else {
        throw UnknownPreset(std::string(name));
    }
    return p;
}

inline constexpr std::array<std::string_view, 8> kFamilyPresetNames{
    "lockbit", "hive", "conti", "blackcat", "royal", "blackbyte", "quantumlocker",
    "medusalocker"};

inline CipherId family_cipher(std::string_view family) {
    if (family == "hive" || family == "blackcat") return CipherId::Chacha;
    if (family == "quantumlocker" || family == "medusalocker") return CipherId::Custom;
    return CipherId::Aes;
}

inline CipherMode family_mode(std::string_view family) {
    if (family == "hive" || family == "blackcat") return CipherMode::Ctr;
    if (family == "royal") return CipherMode::Gcm;
    if (family == "blackbyte") return CipherMode::Ctr;
    if (family == "quantumlocker") return CipherMode::Unknown;
    return CipherMode::Cbc;
}

// --- benign payloads --------------------------------------------------------

struct FileProfile {
    FileType file_type = FileType::Text;
    std::uint64_t min_bytes = 4096;   // >= 1024
    std::uint64_t max_bytes = 131072; // >= min_bytes

    bool operator==(const FileProfile&) const = default;
};

inline void validate_file_profile(const FileProfile& profile) {
    if (profile.min_bytes < 1024) throw InvalidConfig("min_bytes", "must be >= 1024");
    if (profile.max_bytes < profile.min_bytes) {
        throw InvalidConfig("max_bytes", "must be >= min_bytes");
    }
}

namespace detail {

// Symbol table for text payloads: space + a-z with weights in 4096ths,
// quantized from standard English letter frequencies (space share 18%).
// Distribution entropy is ~4.10 bits/byte.
struct TextSymbol {
    char symbol;
    std::uint16_t weight;  // per 4096
};
inline constexpr std::array<TextSymbol, 27> kTextTable{{
    {' ', 738}, {'e', 427}, {'t', 304}, {'a', 274}, {'o', 252}, {'i', 234}, {'n', 227},
    {'s', 212}, {'h', 205}, {'r', 201}, {'d', 143}, {'l', 135}, {'c', 93},  {'u', 93},
    {'m', 81},  {'w', 79},  {'f', 75},  {'g', 68},  {'y', 66},  {'p', 65},  {'b', 50},
    {'v', 33},  {'k', 26},  {'j', 5},   {'x', 5},   {'q', 3},   {'z', 2},
}};

inline const std::array<std::uint8_t, 4096>& text_lookup() {
    static const std::array<std::uint8_t, 4096> table = [] {
        std::array<std::uint8_t, 4096> t{};
        std::size_t at = 0;
        for (std::size_t s = 0; s < kTextTable.size(); ++s) {
            for (std::uint16_t i = 0; i < kTextTable[s].weight; ++i) {
                t[at++] = static_cast<std::uint8_t>(kTextTable[s].symbol);
            }
        }
        return t;
    }();
    return table;
}

// Image structure: a triangular gradient quantized to 32 levels. The period
// is deliberately coprime to common block sizes so blocks sample shifting
// phases.
inline constexpr std::uint64_t kGradientPeriod = 1733;
inline constexpr std::uint64_t kImageRegionBytes = 16384;

inline std::uint8_t gradient_byte(std::uint64_t index) {
    const std::uint64_t phase = index % kGradientPeriod;
    const double t = static_cast<double>(phase) / static_cast<double>(kGradientPeriod);
    const double tri = t < 0.5 ? 2.0 * t : 2.0 - 2.0 * t;
    const auto level = static_cast<std::uint32_t>(tri * 31.999);
    return static_cast<std::uint8_t>(level * 8 + 3);
}

}  // namespace detail

// Deterministic benign payload of exactly `size` bytes.
inline std::vector<std::uint8_t> generate_benign_payload(const FileProfile& profile,
                                                         std::uint64_t size,
                                                         std::uint64_t seed) {
    validate_file_profile(profile);
    if (size == 0) throw SizeOutOfRange("benign payload size must be > 0");
    std::vector<std::uint8_t> data(size);
    SplitMix64 rng(seed);

    switch (profile.file_type) {
        case FileType::Text: {
            const auto& table = detail::text_lookup();
            for (auto& byte : data) {
                byte = table[rng.next() >> 52];
            }
            break;
        }
        case FileType::Image: {
            // Per-region noise fraction in [0.35, 0.45]: regions model flat
            // vs detailed areas, giving mild block-entropy spread.
            std::uint64_t region_noise_threshold = 0;
            for (std::uint64_t i = 0; i < size; ++i) {
                if (i % detail::kImageRegionBytes == 0) {
                    const double frac = 0.35 + 0.10 * rng.next_double();
                    region_noise_threshold =
                        static_cast<std::uint64_t>(frac * 2048.0);  // per 2^11
                }
                const std::uint64_t word = rng.next();
                if ((word >> 53) < region_noise_threshold) {
                    data[i] = static_cast<std::uint8_t>(word & 0xff);
                } else {
                    data[i] = detail::gradient_byte(i);
                }
            }
            break;
        }
        case FileType::Compressed: {
            // Uniform bytes with a biased overlay of 1-3% (rate per payload):
            // well-compressed data is near-uniform but keeps faint structure.
            fill_prng_bytes(rng.next(), data);
            const double rate = 0.01 + 0.02 * rng.next_double();
            const auto overlay = static_cast<std::uint64_t>(rate * static_cast<double>(size));
            for (std::uint64_t i = 0; i < overlay; ++i) {
                const std::uint64_t at = rng.next_below(size);
                data[at] = (rng.next() & 1) ? 0xFF : 0x00;
            }
            break;
        }
        case FileType::Other: {
            // Unclassified files: mid-entropy byte soup (text-like mixing of
            // a wider symbol set).
            for (auto& byte : data) {
                const std::uint64_t word = rng.next();
                byte = static_cast<std::uint8_t>((word % 96) + ((word >> 32) % 32));
            }
            break;
        }
    }
    return data;
}

// --- ransomware payloads ----------------------------------------------------

struct RansomwarePayload {
    std::vector<std::uint8_t> data;
    CryptoAttributes crypto;
};

// Uniform keystream plus intensity-scaled artifacts. Layout is normative:
// pad runs first (run i starts at i * (size / run_count), run 0 at offset 0,
// repeating kPadPattern), then markers (kMarkerBytes at every multiple of
// round(marker_period / intensity), starting at the first multiple, skipping
// offset 0). For fixed seed and size, the injected artifact byte count is
// non-increasing in key_length_bits.
inline RansomwarePayload simulate_ransomware_payload(const FamilyParams& params,
                                                     std::uint64_t size, std::uint64_t seed) {
    validate_family_params(params);
    if (size < kMinRansomwarePayload) {
        throw SizeOutOfRange("ransomware payload size must be >= " +
                             std::to_string(kMinRansomwarePayload) + " bytes");
    }

    RansomwarePayload out;
    out.data.resize(size);
    const std::uint64_t keystream_seed = child_seed(seed, 1);
    fill_prng_bytes(keystream_seed, out.data);

    const double intensity = params.artifact_intensity();

    // Low-entropy pad runs.
    const auto pad_total = static_cast<std::uint64_t>(
        std::floor(params.low_entropy_pad_ratio * intensity * static_cast<double>(size)));
    if (pad_total > 0) {
        const auto run_len = std::max<std::uint64_t>(
            256, static_cast<std::uint64_t>(std::llround(
                     static_cast<double>(kPadRunBytes) * intensity)));
        const std::uint64_t run_count =
            std::clamp<std::uint64_t>((pad_total + run_len - 1) / run_len, 1, kMaxPadRuns);
        std::uint64_t remaining = std::min(pad_total, run_len * kMaxPadRuns);
        const std::uint64_t spacing = size / run_count;
        for (std::uint64_t r = 0; r < run_count && remaining > 0; ++r) {
            const std::uint64_t start = r * spacing;
            const std::uint64_t len = std::min({run_len, remaining, size - start});
            for (std::uint64_t i = 0; i < len; ++i) {
                out.data[start + i] = kPadPattern[i % kPadPattern.size()];
            }
            remaining -= len;
        }
    }

    // Periodic markers.
    if (params.marker_period != 0) {
        const auto eff_period = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(params.marker_period) / intensity));
        for (std::uint64_t at = eff_period; at + kMarkerBytes.size() <= size; at += eff_period) {
            std::copy(kMarkerBytes.begin(), kMarkerBytes.end(), out.data.begin() + at);
        }
    }

    SplitMix64 attr_rng(child_seed(seed, 2));
    out.crypto.cipher_id = family_cipher(params.family);
    out.crypto.mode = family_mode(params.family);
    out.crypto.key_length_bits = params.key_length_bits;
    if (params.key_reuse_mode == KeyReuseMode::SingleKey) {
        // One campaign key per family: a stable hash of the family name.
        std::uint64_t h = 0x633D5A1F0C39ULL;
        for (const char c : params.family) h = child_seed(h, static_cast<std::uint8_t>(c));
        out.crypto.key_id = h;
    } else {
        out.crypto.key_id = attr_rng.next();
    }
    out.crypto.handshake_irregular =
        attr_rng.next_double() < kHandshakeIrregularBase * intensity;
    return out;
}

// --- scenarios ---------------------------------------------------------------

struct BenignMixEntry {
    FileProfile profile;
    double weight = 1.0;             // rate multiplier, > 0
    double events_per_second = 1.0;  // > 0

    bool operator==(const BenignMixEntry&) const = default;
};

struct FamilyActivation {
    FamilyParams params;
    std::int64_t start_ms = 0;

    bool operator==(const FamilyActivation&) const = default;
};

struct JitterRange {
    std::int64_t min_ms = 0;
    std::int64_t max_ms = 0;

    bool operator==(const JitterRange&) const = default;
};

struct ScenarioConfig {
    std::uint64_t seed = 0;
    std::int64_t duration_ms = 60000;
    std::vector<BenignMixEntry> benign_mix;
    std::vector<FamilyActivation> families;
    JitterRange latency_jitter;
    std::string platform = "linux";

    bool operator==(const ScenarioConfig&) const = default;
};

// Benign sources per mix entry (events round-robin across them) and their
// per-file key-reuse probability by file type: scheduled batch jobs over
// compressed archives legitimately reuse session keys more often than
// interactive document or media writes.
inline constexpr std::uint64_t kBenignSourcesPerEntry = 4;
inline double benign_key_reuse_probability(FileType type) {
    switch (type) {
        case FileType::Text: return 0.01;
        case FileType::Image: return 0.01;
        case FileType::Compressed: return 0.12;
        case FileType::Other: return 0.03;
    }
    return 0.0;
}

// Malicious event file sizes (log-uniform range).
inline constexpr std::uint64_t kMalSizeMin = 131072;
inline constexpr std::uint64_t kMalSizeMax = 1048576;

inline void validate_scenario_config(const ScenarioConfig& config) {
    if (config.duration_ms <= 0) throw InvalidConfig("duration_ms", "must be > 0");
    if (config.benign_mix.empty() && config.families.empty()) {
        throw InvalidConfig("benign_mix", "scenario must produce at least one stream");
    }
    for (const auto& entry : config.benign_mix) {
        validate_file_profile(entry.profile);
        if (!(entry.weight > 0.0)) throw InvalidConfig("weight", "must be > 0");
        if (!(entry.events_per_second > 0.0)) {
            throw InvalidConfig("events_per_second", "must be > 0");
        }
    }
    for (const auto& activation : config.families) {
        validate_family_params(activation.params);
        if (activation.start_ms < 0) throw InvalidConfig("start_ms", "must be >= 0");
    }
    if (config.latency_jitter.min_ms < 0 ||
        config.latency_jitter.max_ms < config.latency_jitter.min_ms) {
        throw InvalidConfig("latency_jitter_ms", "requires 0 <= min <= max");
    }
    if (config.platform.empty()) throw InvalidConfig("platform", "must be non-empty");
}

namespace detail {

struct PlannedEvent {
    std::int64_t created_at_ms = 0;
    bool malicious = false;
    std::size_t origin = 0;  // benign mix index or family index
    std::uint64_t seq = 0;   // per-stream sequence number
};

inline std::uint64_t log_uniform_size(SplitMix64& rng, std::uint64_t min_bytes,
                                      std::uint64_t max_bytes) {
    if (min_bytes == max_bytes) return min_bytes;
    const double lo = std::log(static_cast<double>(min_bytes));
    const double hi = std::log(static_cast<double>(max_bytes));
    const double v = std::exp(lo + rng.next_double() * (hi - lo));
    return std::clamp(static_cast<std::uint64_t>(v), min_bytes, max_bytes);
}

}  // namespace detail

// Expands a scenario into a labeled, arrival-ordered event stream.
//
// Stream shapes: benign entries emit at weight * events_per_second with
// regular spacing (staggered per entry, round-robin over
// kBenignSourcesPerEntry sources); families emit at events_per_second from
// start_ms onward from a single source. Every event's payload, attributes,
// and jitter derive from child_seed(config.seed, event_id), where event_id
// numbers events in creation order.
inline std::vector<EncryptionEvent> generate_scenario(const ScenarioConfig& config) {
    validate_scenario_config(config);

    // Pass 1: creation schedule.
    std::vector<detail::PlannedEvent> plan;
    for (std::size_t e = 0; e < config.benign_mix.size(); ++e) {
        const auto& entry = config.benign_mix[e];
        const double rate = entry.weight * entry.events_per_second;  // events per second
        const double spacing_ms = 1000.0 / rate;
        const auto stagger = static_cast<std::int64_t>((e + 1) * 137 % 1000);
        for (std::uint64_t k = 0;; ++k) {
            const auto t = stagger + static_cast<std::int64_t>(
                                         std::llround(static_cast<double>(k) * spacing_ms));
            if (t >= config.duration_ms) break;
            plan.push_back({t, false, e, k});
        }
    }
    for (std::size_t f = 0; f < config.families.size(); ++f) {
        const auto& activation = config.families[f];
        const double spacing_ms = 1000.0 / activation.params.events_per_second;
        for (std::uint64_t k = 0;; ++k) {
            const auto t = activation.start_ms +
                           static_cast<std::int64_t>(
                               std::llround(static_cast<double>(k) * spacing_ms));
            if (t >= config.duration_ms) break;
            plan.push_back({t, true, f, k});
        }
    }
    std::sort(plan.begin(), plan.end(), [](const auto& a, const auto& b) {
        if (a.created_at_ms != b.created_at_ms) return a.created_at_ms < b.created_at_ms;
        if (a.malicious != b.malicious) return !a.malicious;
        if (a.origin != b.origin) return a.origin < b.origin;
        return a.seq < b.seq;
    });

    // Pass 2: materialize events in creation order (event_id order), so
    // per-source key chains evolve chronologically.
    std::vector<EncryptionEvent> events;
    events.reserve(plan.size());
    std::map<std::string, std::uint64_t> last_key_by_source;

    for (std::uint64_t event_id = 0; event_id < plan.size(); ++event_id) {
        const auto& planned = plan[event_id];
        const std::uint64_t child = child_seed(config.seed, event_id);
        SplitMix64 rng(child_seed(child, 2));
        const std::uint64_t payload_seed = child_seed(child, 1);

        EncryptionEvent event;
        event.event_id = event_id;
        event.created_at_ms = planned.created_at_ms;
        event.platform = config.platform;

        if (!planned.malicious) {
            const auto& entry = config.benign_mix[planned.origin];
            event.file_type = entry.profile.file_type;
            event.source_id = "benign-" +
                              std::string(to_token(entry.profile.file_type)) + "-" +
                              std::to_string(planned.origin) + "-" +
                              std::to_string(planned.seq % kBenignSourcesPerEntry);
            const std::uint64_t size = detail::log_uniform_size(rng, entry.profile.min_bytes,
                                                                entry.profile.max_bytes);
            event.file_size_bytes = size;
            auto payload = generate_benign_payload(entry.profile, size, payload_seed);
            if (payload.size() > kDefaultSampleCap) payload.resize(kDefaultSampleCap);
            event.byte_sample = std::move(payload);

            event.crypto.cipher_id = rng.next_double() < 0.7 ? CipherId::Aes : CipherId::Chacha;
            const double mode_draw = rng.next_double();
            event.crypto.mode = mode_draw < 0.40   ? CipherMode::Cbc
                                : mode_draw < 0.75 ? CipherMode::Ctr
                                                   : CipherMode::Gcm;
            event.crypto.key_length_bits =
                kKeyLengthsBits[rng.next_below(kKeyLengthsBits.size())];
            const double reuse_p = benign_key_reuse_probability(entry.profile.file_type);
            const auto last = last_key_by_source.find(event.source_id);
            if (last != last_key_by_source.end() && rng.next_double() < reuse_p) {
                event.crypto.key_id = last->second;
            } else {
                event.crypto.key_id = rng.next();
            }
            event.crypto.handshake_irregular = false;
            event.truth = Truth{TruthLabel::Benign, ""};
        } else {
            const auto& activation = config.families[planned.origin];
            event.file_type = FileType::Other;
            event.source_id =
                activation.params.family + "-" + std::to_string(planned.origin);
            const std::uint64_t size = detail::log_uniform_size(rng, kMalSizeMin, kMalSizeMax);
            event.file_size_bytes = size;
            auto payload = simulate_ransomware_payload(activation.params, size, payload_seed);
            if (payload.data.size() > kDefaultSampleCap) {
                payload.data.resize(kDefaultSampleCap);
            }
            event.byte_sample = std::move(payload.data);
            event.crypto = payload.crypto;
            event.truth = Truth{TruthLabel::Malicious, activation.params.family};
        }
        last_key_by_source[event.source_id] = event.crypto.key_id;

        const std::int64_t span = config.latency_jitter.max_ms - config.latency_jitter.min_ms;
        const std::int64_t jitter =
            config.latency_jitter.min_ms +
            (span > 0 ? static_cast<std::int64_t>(
                            rng.next_below(static_cast<std::uint64_t>(span + 1)))
                      : 0);
        event.arrived_at_ms = event.created_at_ms + jitter;
        events.push_back(std::move(event));
    }

    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
        return a.arrived_at_ms < b.arrived_at_ms;
    });
    return events;
}

// --- scenario presets ---------------------------------------------------------

struct LabeledScenario {
    std::string label;
    ScenarioConfig config;
};

inline constexpr std::array<std::string_view, 7> kScenarioPresetNames{
    "baseline", "key-length-sweep", "file-type-fpr", "latency-sweep",
    "multifamily", "entropy-dist", "scaling"};

namespace detail {

inline std::vector<BenignMixEntry> standard_benign_mix() {
    return {
        {{FileType::Text, 4096, 131072}, 1.0, 3.0},
        {{FileType::Image, 8192, 262144}, 1.0, 2.5},
        {{FileType::Compressed, 8192, 262144}, 1.0, 2.5},
    };
}

inline FamilyParams tuned_family(std::string_view name, double events_per_second) {
    FamilyParams params = family_preset(name);
    params.events_per_second = events_per_second;
    return params;
}

}  // namespace detail

// Named scenario presets. Sweep presets return one labeled config per sweep
// point; the rest return a single element.
inline std::vector<LabeledScenario> preset_scenarios(std::string_view name) {
    std::vector<LabeledScenario> out;
    if (name == "baseline") {
        ScenarioConfig config;
        config.duration_ms = 70000;
        config.benign_mix = detail::standard_benign_mix();
        config.latency_jitter = {5, 15};
        config.families = {
            {detail::tuned_family("lockbit", 2.5), 25000},
            {detail::tuned_family("hive", 2.0), 25000},
            {detail::tuned_family("conti", 2.0), 25000},
        };
        out.push_back({"baseline", std::move(config)});
    } else if (name == "key-length-sweep") {
        for (const auto bits : kKeyLengthsBits) {
            ScenarioConfig config;
            config.duration_ms = 70000;
            config.benign_mix = detail::standard_benign_mix();
            config.latency_jitter = {5, 15};
            config.families = {
                {detail::tuned_family("lockbit", 2.5), 25000},
                {detail::tuned_family("blackcat", 1.0), 25000},
                {detail::tuned_family("royal", 1.0), 25000},
            };
            for (auto& activation : config.families) {
                activation.params.key_length_bits = bits;
            }
            out.push_back({std::to_string(bits), std::move(config)});
        }
    } else if (name == "file-type-fpr") {
        ScenarioConfig config;
        config.duration_ms = 80000;
        config.benign_mix = {
            {{FileType::Text, 4096, 131072}, 1.0, 2.5},
            {{FileType::Image, 8192, 262144}, 1.0, 2.5},
            {{FileType::Compressed, 8192, 262144}, 1.0, 2.5},
        };
        config.latency_jitter = {50, 150};
        config.families = {{detail::tuned_family("lockbit", 1.2), 30000}};
        out.push_back({"file-type-fpr", std::move(config)});
    } else if (name == "latency-sweep") {
        for (const auto mid : {10, 50, 100, 200, 300}) {
            ScenarioConfig config;
            config.duration_ms = 70000;
            config.benign_mix = detail::standard_benign_mix();
            // Spread grows with the mean but is capped at a tenth of the
            // 2 s window: wider spreads stop scattering events across
            // window boundaries and start re-bunching them instead.
            const std::int64_t spread = std::min<std::int64_t>(mid, 200);
            config.latency_jitter = {mid - spread / 2, mid + spread / 2};
            config.families = {
                {detail::tuned_family("lockbit", 2.0), 25000},
                {detail::tuned_family("hive", 2.0), 25000},
                {detail::tuned_family("conti", 2.0), 25000},
            };
            config.families[1].params.key_length_bits = 512;
            config.families[2].params.key_length_bits = 384;
            out.push_back({std::to_string(mid), std::move(config)});
        }
    } else if (name == "multifamily") {
        ScenarioConfig config;
        config.duration_ms = 60000;
        config.benign_mix = detail::standard_benign_mix();
        config.latency_jitter = {0, 0};
        config.families = {
            {detail::tuned_family("lockbit", 3.0), 20000},
            {detail::tuned_family("hive", 2.0), 20000},
            {detail::tuned_family("quantumlocker", 4.0), 20000},
        };
        out.push_back({"multifamily", std::move(config)});
    } else if (name == "entropy-dist") {
        ScenarioConfig config;
        config.duration_ms = 30000;
        config.benign_mix = {{{FileType::Compressed, 8192, 262144}, 1.0, 2.0}};
        config.latency_jitter = {5, 15};
        for (const auto family : kFamilyPresetNames) {
            config.families.push_back({family_preset(family), 5000});
        }
        for (auto& activation : config.families) {
            activation.params.events_per_second = 1.0;
        }
        out.push_back({"entropy-dist", std::move(config)});
    } else if (name == "scaling") {
        for (const auto scale : {1, 10}) {
            ScenarioConfig config;
            config.duration_ms = 100000 * scale;
            config.benign_mix = {
                {{FileType::Text, 4096, 131072}, 1.0, 4.0},
                {{FileType::Image, 8192, 262144}, 1.0, 3.0},
                {{FileType::Compressed, 8192, 262144}, 1.0, 3.0},
            };
            config.latency_jitter = {5, 15};
            config.families = {{detail::tuned_family("lockbit", 0.5), 30000}};
            out.push_back({std::to_string(1000 * scale), std::move(config)});
        }
    } else {
        throw UnknownPreset(std::string(name));
    }
    return out;
}

// --- scenario config codec ------------------------------------------------------

inline ordered_json scenario_to_json(const ScenarioConfig& config) {
    ordered_json doc;
    doc["seed"] = config.seed;
    doc["duration_ms"] = config.duration_ms;
    ordered_json mix = ordered_json::array();
    for (const auto& entry : config.benign_mix) {
        mix.push_back({{"file_type", to_token(entry.profile.file_type)},
                       {"min_bytes", entry.profile.min_bytes},
                       {"max_bytes", entry.profile.max_bytes},
                       {"weight", entry.weight},
                       {"events_per_second", entry.events_per_second}});
    }
    doc["benign_mix"] = std::move(mix);
    ordered_json families = ordered_json::array();
    for (const auto& activation : config.families) {
        families.push_back({{"family", activation.params.family},
                            {"key_length_bits", activation.params.key_length_bits},
                            {"events_per_second", activation.params.events_per_second},
                            {"key_reuse_mode", to_token(activation.params.key_reuse_mode)},
                            {"marker_period", activation.params.marker_period},
                            {"low_entropy_pad_ratio", activation.params.low_entropy_pad_ratio},
                            {"start_ms", activation.start_ms}});
    }
    doc["families"] = std::move(families);
    doc["latency_jitter_ms"] = {{"min", config.latency_jitter.min_ms},
                                {"max", config.latency_jitter.max_ms}};
    doc["platform"] = config.platform;
    return doc;
}

inline ScenarioConfig scenario_from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw MalformedRecord("scenario config is not a JSON object");
    cryptoprint::detail::reject_unknown_fields(
        doc, {"seed", "duration_ms", "benign_mix", "families", "latency_jitter_ms", "platform"},
        "scenario");
    ScenarioConfig config;
    config.seed = cryptoprint::detail::require_field<std::uint64_t>(doc, "seed", "scenario");
    config.duration_ms =
        cryptoprint::detail::require_field<std::int64_t>(doc, "duration_ms", "scenario");
    const auto mix_it = doc.find("benign_mix");
    if (mix_it != doc.end()) {
        if (!mix_it->is_array()) throw MalformedRecord("benign_mix must be an array");
        for (const auto& entry : *mix_it) {
            cryptoprint::detail::reject_unknown_fields(
                entry, {"file_type", "min_bytes", "max_bytes", "weight", "events_per_second"},
                "benign_mix entry");
            BenignMixEntry parsed;
            parsed.profile.file_type = cryptoprint::detail::require_token<FileType>(
                entry, "file_type", kFileTypeTokens, "benign_mix entry");
            parsed.profile.min_bytes = cryptoprint::detail::require_field<std::uint64_t>(
                entry, "min_bytes", "benign_mix entry");
            parsed.profile.max_bytes = cryptoprint::detail::require_field<std::uint64_t>(
                entry, "max_bytes", "benign_mix entry");
            const auto weight_it = entry.find("weight");
            if (weight_it == entry.end() || !weight_it->is_number()) {
                throw MalformedRecord("benign_mix entry needs numeric 'weight'");
            }
            parsed.weight = weight_it->get<double>();
            const auto eps_it = entry.find("events_per_second");
            if (eps_it == entry.end() || !eps_it->is_number()) {
                throw MalformedRecord("benign_mix entry needs numeric 'events_per_second'");
            }
            parsed.events_per_second = eps_it->get<double>();
            config.benign_mix.push_back(parsed);
        }
    }
    const auto families_it = doc.find("families");
    if (families_it != doc.end()) {
        if (!families_it->is_array()) throw MalformedRecord("families must be an array");
        for (const auto& entry : *families_it) {
            cryptoprint::detail::reject_unknown_fields(
                entry,
                {"family", "key_length_bits", "events_per_second", "key_reuse_mode",
                 "marker_period", "low_entropy_pad_ratio", "start_ms"},
                "family entry");
            FamilyActivation activation;
            activation.params.family = cryptoprint::detail::require_field<std::string>(
                entry, "family", "family entry");
            activation.params.key_length_bits =
                cryptoprint::detail::require_field<std::uint32_t>(entry, "key_length_bits",
                                                                  "family entry");
            const auto eps_it = entry.find("events_per_second");
            if (eps_it == entry.end() || !eps_it->is_number()) {
                throw MalformedRecord("family entry needs numeric 'events_per_second'");
            }
            activation.params.events_per_second = eps_it->get<double>();
            const auto reuse = cryptoprint::detail::require_field<std::string>(
                entry, "key_reuse_mode", "family entry");
            if (reuse == kKeyReuseTokens[0]) {
                activation.params.key_reuse_mode = KeyReuseMode::SingleKey;
            } else if (reuse == kKeyReuseTokens[1]) {
                activation.params.key_reuse_mode = KeyReuseMode::PerFileKey;
            } else {
                throw MalformedRecord("unknown key_reuse_mode '" + reuse + "'");
            }
            activation.params.marker_period = cryptoprint::detail::require_field<std::uint64_t>(
                entry, "marker_period", "family entry");
            const auto pad_it = entry.find("low_entropy_pad_ratio");
            if (pad_it == entry.end() || !pad_it->is_number()) {
                throw MalformedRecord("family entry needs numeric 'low_entropy_pad_ratio'");
            }
            activation.params.low_entropy_pad_ratio = pad_it->get<double>();
            activation.start_ms = cryptoprint::detail::require_field<std::int64_t>(
                entry, "start_ms", "family entry");
            config.families.push_back(std::move(activation));
        }
    }
    const auto jitter_it = doc.find("latency_jitter_ms");
    if (jitter_it != doc.end()) {
        if (!jitter_it->is_object()) throw MalformedRecord("latency_jitter_ms must be an object");
        cryptoprint::detail::reject_unknown_fields(*jitter_it, {"min", "max"},
                                                   "latency_jitter_ms");
        config.latency_jitter.min_ms =
            cryptoprint::detail::require_field<std::int64_t>(*jitter_it, "min",
                                                             "latency_jitter_ms");
        config.latency_jitter.max_ms =
            cryptoprint::detail::require_field<std::int64_t>(*jitter_it, "max",
                                                             "latency_jitter_ms");
    }
    if (const auto platform_it = doc.find("platform"); platform_it != doc.end()) {
        config.platform =
            cryptoprint::detail::require_field<std::string>(doc, "platform", "scenario");
    }
    validate_scenario_config(config);
    return config;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(std::string("scenario config is not valid JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

}  // namespace cryptoprint::synth
