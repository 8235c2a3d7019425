#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace aepl {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed dataset file. Carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    enum class Kind { BadMagic, VersionMismatch, BadHeader, Truncated, TrailingBytes, NonFinite, InvalidContent };

    FormatError(Kind kind, std::uint64_t offset, const std::string& what)
        : Error("format error at byte " + std::to_string(offset) + ": " + what), kind_(kind), offset_(offset) {}

    Kind kind() const noexcept { return kind_; }
    std::uint64_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::uint64_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A precondition on the inputs of an operation does not hold.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The classifier cannot be scored (e.g. a zero-norm weight row).
class DegenerateModelError : public Error {
public:
    using Error::Error;
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(std::size_t step, const std::string& what)
        : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Internal bookkeeping went inconsistent (duplicate pool index, ledger mismatch).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// An experiment round failed; wraps the original message with the round number.
class RoundError : public Error {
public:
    RoundError(std::size_t round, const std::string& what)
        : Error("round " + std::to_string(round) + ": " + what), round_(round) {}
    std::size_t round() const noexcept { return round_; }

private:
    std::size_t round_;
};

}  // namespace aepl
