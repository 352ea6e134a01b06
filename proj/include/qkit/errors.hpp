#pragma once

#include <stdexcept>
#include <string>

namespace qkit {

enum class ErrorKind {
    Configuration,
    Validation,
    GateDefinition,
    Parse,
    Execution,
    Resource,
    Internal,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library. `line` is the 1-based source
/// line of the offending `.qp` instruction, or 0 when not tied to a line.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, int line = 0);

    ErrorKind kind() const noexcept { return kind_; }
    int line() const noexcept { return line_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    int line_;
    std::string message_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m, int line = 0) : Error(ErrorKind::Configuration, m, line) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& m, int line = 0) : Error(ErrorKind::Validation, m, line) {}
};
struct GateDefinitionError : Error {
    explicit GateDefinitionError(const std::string& m, int line = 0) : Error(ErrorKind::GateDefinition, m, line) {}
};
struct ExecutionError : Error {
    explicit ExecutionError(const std::string& m, int line = 0) : Error(ErrorKind::Execution, m, line) {}
};
struct ResourceError : Error {
    ResourceError(const std::string& m, unsigned long long required_bytes, int line = 0)
        : Error(ErrorKind::Resource, m, line), required_bytes(required_bytes) {}
    unsigned long long required_bytes;
};
struct InternalError : Error {
    explicit InternalError(const std::string& m, int line = 0) : Error(ErrorKind::Internal, m, line) {}
};

/// Throws an error of the same concrete type as `e`, tagged with `line`.
[[noreturn]] void rethrow_at_line(const Error& e, int line);

}  // namespace qkit
