// Error taxonomy shared by every module. All failures are reported as typed
// exceptions so callers can distinguish malformed input from contract misuse.
#pragma once

#include <stdexcept>
#include <string>

namespace cryptoprint {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// A serialized record (event line, model document, config document) that is
// not syntactically valid.
class MalformedRecord : public Error {
public:
    explicit MalformedRecord(const std::string& detail)
        : Error("malformed record: " + detail) {}
};

// A structurally valid value that violates a documented type invariant.
// Carries the name of the offending field.
class InvariantViolation : public Error {
public:
    InvariantViolation(const std::string& field, const std::string& detail)
        : Error("invariant violation [" + field + "]: " + detail), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// An operation that requires at least one element received none.
class EmptyInput : public Error {
public:
    explicit EmptyInput(const std::string& what_arg) : Error("empty input: " + what_arg) {}
};

// Block size exceeds the data it should partition.
class BlockTooLarge : public Error {
public:
    explicit BlockTooLarge(const std::string& detail) : Error("block too large: " + detail) {}
};

// Input is non-empty but below a documented minimum length.
class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& detail)
        : Error("insufficient data: " + detail) {}
};

// Two vectors (or a vector and fitted statistics) disagree on dimension.
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& detail)
        : Error("dimension mismatch: " + detail) {}
};

// A baseline fit was handed events that are not uniformly benign-labeled.
class MixedLabels : public Error {
public:
    explicit MixedLabels(const std::string& detail) : Error("mixed labels: " + detail) {}
};

// A model document that parses but fails structural or semantic checks.
class MalformedModel : public Error {
public:
    explicit MalformedModel(const std::string& detail) : Error("malformed model: " + detail) {}
};

// A model document whose version this build does not support.
class VersionMismatch : public Error {
public:
    explicit VersionMismatch(const std::string& detail) : Error("version mismatch: " + detail) {}
};

// A requested payload or block size outside the supported range.
class SizeOutOfRange : public Error {
public:
    explicit SizeOutOfRange(const std::string& detail) : Error("size out of range: " + detail) {}
};

// A configuration document with an out-of-range or inconsistent field.
// Carries the name of the offending field.
class InvalidConfig : public Error {
public:
    InvalidConfig(const std::string& field, const std::string& detail)
        : Error("invalid config [" + field + "]: " + detail), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// A preset name that does not exist.
class UnknownPreset : public Error {
public:
    explicit UnknownPreset(const std::string& name) : Error("unknown preset: " + name) {}
};

// A stream whose arrival timestamps regress.
class UnorderedInput : public Error {
public:
    explicit UnorderedInput(const std::string& detail) : Error("unordered input: " + detail) {}
};

// A verdict that cannot be joined against ground truth.
class MissingTruth : public Error {
public:
    explicit MissingTruth(const std::string& detail) : Error("missing truth: " + detail) {}
};

// Histogram bin edges that are not strictly ascending (or fewer than two).
class BadEdges : public Error {
public:
    explicit BadEdges(const std::string& detail) : Error("bad edges: " + detail) {}
};

// A filesystem read or write that failed.
class IoFailure : public Error {
public:
    explicit IoFailure(const std::string& detail) : Error("io failure: " + detail) {}
};

}  // namespace cryptoprint
