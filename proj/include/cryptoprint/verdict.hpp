// Per-event detection verdicts and their line-delimited codec (same style as
// the event codec: one JSON object per line, unknown fields rejected).
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cryptoprint/codec.hpp"
#include "cryptoprint/errors.hpp"
#include "cryptoprint/event.hpp"

namespace cryptoprint {

struct Verdict {
    std::uint64_t event_id = 0;
    std::uint64_t cluster_id = 0;   // unique across the whole stream
    double score = 0.0;             // the event's calibrated anomaly score
    TruthLabel label = TruthLabel::Benign;
    std::int64_t detected_at_ms = 0;  // close of the event's window

    bool operator==(const Verdict&) const = default;
};

inline std::string encode_verdict(const Verdict& verdict) {
    const ordered_json line{
        {"event_id", verdict.event_id},
        {"cluster_id", verdict.cluster_id},
        {"score", verdict.score},
        {"label", to_token(verdict.label)},
        {"detected_at_ms", verdict.detected_at_ms},
    };
    return line.dump();
}

inline Verdict decode_verdict(std::string_view line) {
    ordered_json parsed;
    try {
        parsed = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedRecord(std::string("verdict line is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object()) throw MalformedRecord("verdict line is not a JSON object");
    detail::reject_unknown_fields(
        parsed, {"event_id", "cluster_id", "score", "label", "detected_at_ms"}, "verdict");
    Verdict verdict;
    verdict.event_id = detail::require_field<std::uint64_t>(parsed, "event_id", "verdict");
    verdict.cluster_id = detail::require_field<std::uint64_t>(parsed, "cluster_id", "verdict");
    const auto score_it = parsed.find("score");
    if (score_it == parsed.end() || !score_it->is_number()) {
        throw MalformedRecord("missing or non-numeric 'score' in verdict");
    }
    verdict.score = score_it->get<double>();
    verdict.label = detail::require_token<TruthLabel>(parsed, "label", kTruthTokens, "verdict");
    verdict.detected_at_ms =
        detail::require_field<std::int64_t>(parsed, "detected_at_ms", "verdict");
    return verdict;
}

inline std::string encode_verdicts(const std::vector<Verdict>& verdicts) {
    std::string out;
    for (const auto& verdict : verdicts) {
        out += encode_verdict(verdict);
        out += '\n';
    }
    return out;
}

inline std::vector<Verdict> decode_verdicts(std::string_view text) {
    std::vector<Verdict> verdicts;
    std::size_t line_no = 0;
    std::size_t begin = 0;
    while (begin < text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(begin, end - begin);
        ++line_no;
        if (line.empty()) {
            throw MalformedRecord("blank line " + std::to_string(line_no) +
                                  " in verdict stream");
        }
        verdicts.push_back(decode_verdict(line));
        begin = end + 1;
    }
    return verdicts;
}

inline std::vector<Verdict> read_verdicts_file(const std::string& path) {
    return decode_verdicts(read_text_file(path));
}

inline void write_verdicts_file(const std::string& path, const std::vector<Verdict>& verdicts) {
    write_text_file(path, encode_verdicts(verdicts));
}

}  // namespace cryptoprint
