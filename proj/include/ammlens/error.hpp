#pragma once

#include <stdexcept>
#include <string>

namespace ammlens {

// Bad input or configuration. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failure while executing an otherwise valid request (exit code 1).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ingestion failure tied to a specific line of an input file.
class IngestError : public ValidationError {
public:
    IngestError(const std::string& path, std::size_t line, const std::string& what)
        : ValidationError(path + ":" + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace ammlens
