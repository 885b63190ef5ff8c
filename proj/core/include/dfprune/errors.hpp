#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfprune {

// Operand shapes disagree (vector length, layer fan-in, model vs dataset).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A request that is well-formed but not valid for this object
// (pruning the output layer, rescaling a sigmoid layer, unsorted plan...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed model / trace / dataset file. Carries the 1-based line number
// of the offending record (0 when the failure is not tied to a line).
class ParseError : public IoError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : IoError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VersionError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace dfprune
