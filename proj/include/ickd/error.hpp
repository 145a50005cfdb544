#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ickd {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad shapes, out-of-range scalars, mismatched lengths.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A vector with near-zero norm was used where a direction is required.
// Similarity code refuses these instead of defaulting to zero.
class DegenerateVector : public Error {
public:
    using Error::Error;
};

// A retrieval mask left no candidates for the query.
class InsufficientCandidates : public Error {
public:
    using Error::Error;
};

// NaN or Inf showed up where finite arithmetic was expected.
class NumericInstability : public Error {
public:
    using Error::Error;
};

// Malformed binary file. Carries the byte offset of the first problem.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_ = 0;
};

// Bad config text. Carries the 1-based line and column of the offender.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_ = 0;
    std::size_t column_ = 0;
};

// Process exit codes used by the CLI front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitConfigError = 2,
    kExitNumericError = 3,
    kExitInputError = 4,
};

} // namespace ickd
