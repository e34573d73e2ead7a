#pragma once

#include <stdexcept>
#include <string>

namespace homenum {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (structure files, sequence files, decomposition files).
class ParseError : public Error {
public:
    ParseError(int line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message),
          line_(line),
          message_(message) {}
    int line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    int line_;
    std::string message_;
};

// A width bound was given and the relevant graph genuinely exceeds it.
// Distinct from a "no homomorphism" answer.
class WidthExceededError : public Error {
public:
    using Error::Error;
};

// An endomorphism sequence (or retraction chain) fails one of its defining
// conditions.
class InvalidSequenceError : public Error {
public:
    using Error::Error;
};

// An exact computation was refused because the instance is too large for it.
class SizeGuardError : public Error {
public:
    using Error::Error;
};

// Caller handed in something structurally wrong: out-of-range indices,
// mismatched vocabularies, unknown family names, and the like.
class DomainError : public Error {
public:
    using Error::Error;
};

// A seed assignment that is not a partial homomorphism where one is required.
class InvalidSeedError : public DomainError {
public:
    using DomainError::DomainError;
};

} // namespace homenum
