#pragma once

#include <stdexcept>
#include <string>

namespace hrkg {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration, usage, or flags. CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unknown export/report format name.
class FormatError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Search could not score a single candidate within the call budget.
class OptimizationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Data violates a documented invariant (empty field, duplicate doc, ...).
// CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input bytes (JSON syntax, bad record shape). CLI exit code 2.
class ParseError : public Error {
public:
    using Error::Error;
};

// Network / backend failures after retries. CLI exit code 3.
class TransportError : public Error {
public:
    using Error::Error;
};

// HTTP 4xx other than 429: the request itself was rejected, not retried.
class RequestError : public TransportError {
public:
    using TransportError::TransportError;
};

// Endpoint answered but the assistant text was empty.
class EmptyResponseError : public TransportError {
public:
    using TransportError::TransportError;
};

// No JSON fact array could be recovered from LLM output (after repair tiers).
// Carries the raw text so callers can re-ask or persist the evidence.
class UnparseableOutputError : public Error {
public:
    explicit UnparseableOutputError(std::string raw)
        : Error("no parseable JSON fact array in LLM output"), raw_(std::move(raw)) {}

    const std::string& raw_text() const noexcept { return raw_; }

private:
    std::string raw_;
};

} // namespace hrkg
