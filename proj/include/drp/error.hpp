#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace drp {

enum class ErrorKind : std::uint8_t {
    // input / validation
    Io,
    Parse,
    Partition,
    UnknownUser,
    EmptyText,
    EmptyHistory,
    ZeroVector,
    TooFewPoints,
    DimensionMismatch,
    InsufficientUsers,
    LengthMismatch,
    EmptyInput,
    MissingReference,
    SampleSetMismatch,
    DegenerateInput,
    Config,
    InvalidArgument,
    // provider / runtime
    Provider,
    Timeout,
    Http,
    FixtureMiss,
    Protocol,
    CacheIo,
    ExtractionParse,
    ValidationParse,
    JudgeParse,
};

[[nodiscard]] const char* error_kind_name(ErrorKind kind) noexcept;

// Exit code contract for the CLI: 2 for input/validation problems, 3 for
// provider or runtime failures.
[[nodiscard]] int exit_code_for(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + reason),
          line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class HttpError : public Error {
public:
    HttpError(int status, const std::string& body)
        : Error(ErrorKind::Http, "status " + std::to_string(status) + ": " + body),
          status_(status) {}

    [[nodiscard]] int status() const noexcept { return status_; }

private:
    int status_;
};

// Raised when a model response cannot be parsed; keeps the raw text around
// so callers can log or persist it.
class OutputParseError : public Error {
public:
    OutputParseError(ErrorKind kind, const std::string& message, std::string raw)
        : Error(kind, message), raw_(std::move(raw)) {}

    [[nodiscard]] const std::string& raw_output() const noexcept { return raw_; }

private:
    std::string raw_;
};

}  // namespace drp
