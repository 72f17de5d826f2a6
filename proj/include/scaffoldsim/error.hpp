#pragma once

#include <stdexcept>
#include <string>

namespace scaffoldsim {

enum class ErrorKind {
    invalid_argument,
    format,
    validation,
    io,
    network,
    generation,
    structured_output,
    protocol,
    internal,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Transport failures may succeed on a later attempt; nothing else should be retried.
    bool retryable() const noexcept { return kind_ == ErrorKind::network; }

private:
    ErrorKind kind_;
};

/// Raised when a structured response could not be parsed within the repair budget.
class StructuredOutputError : public Error {
public:
    StructuredOutputError(const std::string& message, std::string raw_text, int attempts)
        : Error(ErrorKind::structured_output, message),
          raw_text_(std::move(raw_text)),
          attempts_(attempts) {}

    const std::string& raw_text() const noexcept { return raw_text_; }
    int attempts() const noexcept { return attempts_; }

private:
    std::string raw_text_;
    int attempts_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace scaffoldsim
