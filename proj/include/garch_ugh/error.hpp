#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace garch_ugh {

// Bad input: malformed files, violated preconditions, invalid configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical step failed on otherwise valid input (non-finite recursion,
// degenerate tail, ...).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace garch_ugh
