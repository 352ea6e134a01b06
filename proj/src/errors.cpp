#include "qkit/errors.hpp"

namespace qkit {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::GateDefinition: return "gate definition error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Execution: return "execution error";
    case ErrorKind::Resource: return "resource error";
    case ErrorKind::Internal: return "internal error";
    }
    return "error";
}

static std::string format_error(ErrorKind kind, const std::string& message, int line)
{
    std::string out = to_string(kind);
    if (line > 0)
        out += " at line " + std::to_string(line);
    out += ": " + message;
    return out;
}

Error::Error(ErrorKind kind, const std::string& message, int line)
    : std::runtime_error(format_error(kind, message, line)), kind_(kind), line_(line), message_(message)
{
}

void rethrow_at_line(const Error& e, int line)
{
    switch (e.kind()) {
    case ErrorKind::Configuration: throw ConfigError(e.message(), line);
    case ErrorKind::Validation: throw ValidationError(e.message(), line);
    case ErrorKind::GateDefinition: throw GateDefinitionError(e.message(), line);
    case ErrorKind::Execution: throw ExecutionError(e.message(), line);
    case ErrorKind::Resource:
        if (const auto* r = dynamic_cast<const ResourceError*>(&e))
            throw ResourceError(e.message(), r->required_bytes, line);
        throw ResourceError(e.message(), 0, line);
    case ErrorKind::Internal: throw InternalError(e.message(), line);
    case ErrorKind::Parse: break;
    }
    throw Error(e.kind(), e.message(), line);
}

}  // namespace qkit
