// Core domain types: one encryption-activity observation per event, with the
// cryptographic attributes the sensors can actually report. These are the
// values every other module consumes.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryptoprint/errors.hpp"

namespace cryptoprint {

// byte_sample never exceeds this many bytes.
inline constexpr std::size_t kDefaultSampleCap = 65536;

// Permitted key lengths, bits.
inline constexpr std::array<std::uint32_t, 5> kKeyLengthsBits{128, 192, 256, 384, 512};

enum class CipherId : std::uint8_t { Aes, Chacha, Custom, Unknown };
enum class CipherMode : std::uint8_t { Cbc, Ctr, Gcm, Unknown };
enum class FileType : std::uint8_t { Text, Image, Compressed, Other };
enum class TruthLabel : std::uint8_t { Benign, Malicious };

// Closed vocabularies, index-aligned with the enums above. "unknown" /
// "other" are the escape tokens for values outside the vocabulary.
inline constexpr std::array<std::string_view, 4> kCipherTokens{"aes", "chacha", "custom",
                                                               "unknown"};
inline constexpr std::array<std::string_view, 4> kModeTokens{"cbc", "ctr", "gcm", "unknown"};
inline constexpr std::array<std::string_view, 4> kFileTypeTokens{"text", "image",
                                                                 "compressed", "other"};
inline constexpr std::array<std::string_view, 2> kTruthTokens{"benign", "malicious"};

inline constexpr std::size_t kModeCount = kModeTokens.size();

template <typename Enum, std::size_t N>
std::optional<Enum> token_to_enum(const std::array<std::string_view, N>& tokens,
                                  std::string_view token) {
    for (std::size_t i = 0; i < N; ++i) {
        if (tokens[i] == token) return static_cast<Enum>(i);
    }
    return std::nullopt;
}

inline std::string_view to_token(CipherId v) { return kCipherTokens[static_cast<std::size_t>(v)]; }
inline std::string_view to_token(CipherMode v) { return kModeTokens[static_cast<std::size_t>(v)]; }
inline std::string_view to_token(FileType v) {
    return kFileTypeTokens[static_cast<std::size_t>(v)];
}
inline std::string_view to_token(TruthLabel v) {
    return kTruthTokens[static_cast<std::size_t>(v)];
}

struct CryptoAttributes {
    CipherId cipher_id = CipherId::Unknown;
    CipherMode mode = CipherMode::Unknown;
    std::uint32_t key_length_bits = 128;
    std::uint64_t key_id = 0;
    bool handshake_irregular = false;

    bool operator==(const CryptoAttributes&) const = default;
};

struct Truth {
    TruthLabel label = TruthLabel::Benign;
    std::string family;  // empty for benign events

    bool operator==(const Truth&) const = default;
};

struct EncryptionEvent {
    std::uint64_t event_id = 0;
    std::string source_id;
    std::int64_t created_at_ms = 0;
    std::int64_t arrived_at_ms = 0;
    FileType file_type = FileType::Other;
    std::uint64_t file_size_bytes = 0;
    std::vector<std::uint8_t> byte_sample;
    CryptoAttributes crypto;
    std::optional<Truth> truth;
    std::string platform;  // empty when untagged

    bool operator==(const EncryptionEvent&) const = default;
};

inline bool is_valid_key_length(std::uint32_t bits) {
    for (const auto allowed : kKeyLengthsBits) {
        if (bits == allowed) return true;
    }
    return false;
}

// Checks every type invariant; throws InvariantViolation naming the first
// offending field. Uniqueness of event_id is a file-level property checked by
// the codec, not here.
inline void validate_event(const EncryptionEvent& event,
                           std::size_t sample_cap = kDefaultSampleCap) {
    if (event.source_id.empty()) {
        throw InvariantViolation("source_id", "must be non-empty");
    }
    if (event.arrived_at_ms < event.created_at_ms) {
        throw InvariantViolation("arrived_at_ms", "must be >= created_at_ms");
    }
    if (event.byte_sample.size() > sample_cap) {
        throw InvariantViolation("byte_sample", "length exceeds sample cap");
    }
    if (event.byte_sample.size() > event.file_size_bytes) {
        throw InvariantViolation("byte_sample", "length exceeds file_size_bytes");
    }
    if (!is_valid_key_length(event.crypto.key_length_bits)) {
        throw InvariantViolation("key_length_bits", "must be one of 128/192/256/384/512");
    }
    if (event.truth && event.truth->label == TruthLabel::Benign &&
        !event.truth->family.empty()) {
        throw InvariantViolation("truth.family", "benign events carry no family tag");
    }
    if (event.truth && event.truth->label == TruthLabel::Malicious &&
        event.truth->family.empty()) {
        throw InvariantViolation("truth.family", "malicious events must name a family");
    }
}

}  // namespace cryptoprint
