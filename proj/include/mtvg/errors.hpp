#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtvg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a domain precondition (bad interval, index out of range, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Matrix or layout dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed binary container or JSON document. `offset()` is a byte offset
/// for binary inputs and a 1-based record number for line-oriented inputs.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Training produced a NaN or infinite loss.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace mtvg
