// Line-delimited event codec. One JSON object per line, field set and names
// fixed; unknown fields are rejected so schema drift fails loudly instead of
// being silently ignored. decode_event(encode_event(e)) == e for every valid
// event.
#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cryptoprint/base64.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"

namespace cryptoprint {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown_fields(const ordered_json& object,
                                  std::initializer_list<std::string_view> allowed,
                                  std::string_view where) {
    for (const auto& item : object.items()) {
        bool known = false;
        for (const auto& name : allowed) {
            if (item.key() == name) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw MalformedRecord("unknown field '" + item.key() + "' in " +
                                  std::string(where));
        }
    }
}

template <typename T>
T require_field(const ordered_json& object, std::string_view name, std::string_view where) {
    const auto it = object.find(name);
    if (it == object.end()) {
        throw MalformedRecord("missing field '" + std::string(name) + "' in " +
                              std::string(where));
    }
    const auto fail = [&]() -> MalformedRecord {
        return MalformedRecord("field '" + std::string(name) + "' in " + std::string(where) +
                               " has the wrong type");
    };
    // Numeric fields are checked strictly: no floats where integers are
    // expected, no negative values into unsigned fields, no silent narrowing.
    if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw fail();
        return it->template get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw fail();
        return it->template get<std::string>();
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned()) {
            // Non-negative signed storage is fine; floats and negatives are not.
            if (!it->is_number_integer() || it->template get<std::int64_t>() < 0) throw fail();
        }
        const auto wide = it->template get<std::uint64_t>();
        if (wide > std::numeric_limits<T>::max()) throw fail();
        return static_cast<T>(wide);
    } else {
        static_assert(std::is_same_v<T, std::int64_t>);
        if (!it->is_number_integer() && !it->is_number_unsigned()) throw fail();
        if (it->is_number_unsigned() &&
            it->template get<std::uint64_t>() >
                static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            throw fail();
        }
        return it->template get<std::int64_t>();
    }
}

template <typename Enum, std::size_t N>
Enum require_token(const ordered_json& object, std::string_view name,
                   const std::array<std::string_view, N>& tokens, std::string_view where) {
    const auto token = require_field<std::string>(object, name, where);
    const auto value = token_to_enum<Enum>(tokens, token);
    if (!value) {
        throw MalformedRecord("field '" + std::string(name) + "' in " + std::string(where) +
                              " holds unknown token '" + token + "'");
    }
    return *value;
}

}  // namespace detail

inline ordered_json event_to_json(const EncryptionEvent& event) {
    ordered_json crypto{
        {"cipher_id", to_token(event.crypto.cipher_id)},
        {"mode", to_token(event.crypto.mode)},
        {"key_length_bits", event.crypto.key_length_bits},
        {"key_id", event.crypto.key_id},
        {"handshake_irregular", event.crypto.handshake_irregular},
    };
    ordered_json line{
        {"event_id", event.event_id},
        {"source_id", event.source_id},
        {"created_at_ms", event.created_at_ms},
        {"arrived_at_ms", event.arrived_at_ms},
        {"file_type", to_token(event.file_type)},
        {"file_size_bytes", event.file_size_bytes},
        {"byte_sample", base64_encode(event.byte_sample)},
        {"crypto", std::move(crypto)},
    };
    if (event.truth) {
        ordered_json truth{{"label", to_token(event.truth->label)}};
        if (!event.truth->family.empty()) truth["family"] = event.truth->family;
        line["truth"] = std::move(truth);
    }
    if (!event.platform.empty()) line["platform"] = event.platform;
    return line;
}

inline std::string encode_event(const EncryptionEvent& event) {
    return event_to_json(event).dump();
}

// Parses, shape-checks, and invariant-checks one line.
inline EncryptionEvent decode_event(std::string_view line,
                                    std::size_t sample_cap = kDefaultSampleCap) {
    ordered_json parsed;
    try {
        parsed = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(std::string("event line is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object()) throw MalformedRecord("event line is not a JSON object");
    detail::reject_unknown_fields(parsed,
                                  {"event_id", "source_id", "created_at_ms", "arrived_at_ms",
                                   "file_type", "file_size_bytes", "byte_sample", "crypto",
                                   "truth", "platform"},
                                  "event");

    EncryptionEvent event;
    event.event_id = detail::require_field<std::uint64_t>(parsed, "event_id", "event");
    event.source_id = detail::require_field<std::string>(parsed, "source_id", "event");
    event.created_at_ms = detail::require_field<std::int64_t>(parsed, "created_at_ms", "event");
    event.arrived_at_ms = detail::require_field<std::int64_t>(parsed, "arrived_at_ms", "event");
    event.file_type =
        detail::require_token<FileType>(parsed, "file_type", kFileTypeTokens, "event");
    event.file_size_bytes =
        detail::require_field<std::uint64_t>(parsed, "file_size_bytes", "event");

    const auto sample_b64 = detail::require_field<std::string>(parsed, "byte_sample", "event");
    auto decoded = base64_decode(sample_b64);
    if (!decoded) throw MalformedRecord("byte_sample is not valid base64");
    event.byte_sample = std::move(*decoded);

    const auto crypto_it = parsed.find("crypto");
    if (crypto_it == parsed.end() || !crypto_it->is_object()) {
        throw MalformedRecord("missing or non-object 'crypto' in event");
    }
    detail::reject_unknown_fields(
        *crypto_it, {"cipher_id", "mode", "key_length_bits", "key_id", "handshake_irregular"},
        "crypto");
    event.crypto.cipher_id =
        detail::require_token<CipherId>(*crypto_it, "cipher_id", kCipherTokens, "crypto");
    event.crypto.mode =
        detail::require_token<CipherMode>(*crypto_it, "mode", kModeTokens, "crypto");
    event.crypto.key_length_bits =
        detail::require_field<std::uint32_t>(*crypto_it, "key_length_bits", "crypto");
    event.crypto.key_id = detail::require_field<std::uint64_t>(*crypto_it, "key_id", "crypto");
    event.crypto.handshake_irregular =
        detail::require_field<bool>(*crypto_it, "handshake_irregular", "crypto");

    if (const auto truth_it = parsed.find("truth"); truth_it != parsed.end()) {
        if (!truth_it->is_object()) throw MalformedRecord("'truth' must be an object");
        detail::reject_unknown_fields(*truth_it, {"label", "family"}, "truth");
        Truth truth;
        truth.label = detail::require_token<TruthLabel>(*truth_it, "label", kTruthTokens, "truth");
        if (truth_it->contains("family")) {
            truth.family = detail::require_field<std::string>(*truth_it, "family", "truth");
        }
        event.truth = std::move(truth);
    }
    if (const auto platform_it = parsed.find("platform"); platform_it != parsed.end()) {
        event.platform = detail::require_field<std::string>(parsed, "platform", "event");
    }

    validate_event(event, sample_cap);
    return event;
}

inline std::string encode_events(const std::vector<EncryptionEvent>& events) {
    std::string out;
    for (const auto& event : events) {
        out += encode_event(event);
        out += '\n';
    }
    return out;
}

// Decodes a whole stream; blank lines are rejected, duplicate event ids are a
// file-level invariant violation.
inline std::vector<EncryptionEvent> decode_events(std::string_view text,
                                                  std::size_t sample_cap = kDefaultSampleCap) {
    std::vector<EncryptionEvent> events;
    std::unordered_set<std::uint64_t> seen_ids;
    std::size_t line_no = 0;
    std::size_t begin = 0;
    while (begin < text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(begin, end - begin);
        ++line_no;
        if (line.empty()) {
            throw MalformedRecord("blank line " + std::to_string(line_no) + " in event stream");
        }
        EncryptionEvent event;
        try {
            event = decode_event(line, sample_cap);
        } catch (const Error& e) {
            throw MalformedRecord("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(event.event_id).second) {
            throw InvariantViolation("event_id",
                                     "duplicate id " + std::to_string(event.event_id) +
                                         " at line " + std::to_string(line_no));
        }
        events.push_back(std::move(event));
        begin = end + 1;
    }
    return events;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoFailure("read error on '" + path + "'");
    return std::move(buffer).str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoFailure("write error on '" + path + "'");
}

inline std::vector<EncryptionEvent> read_events_file(const std::string& path) {
    return decode_events(read_text_file(path));
}

inline void write_events_file(const std::string& path,
                              const std::vector<EncryptionEvent>& events) {
    write_text_file(path, encode_events(events));
}

}  // namespace cryptoprint
