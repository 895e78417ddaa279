#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swapgrid
{

enum class ErrorKind
{
    SchemaViolation,
    NonTreeTopology,
    DanglingReference,
    InvalidArgument,
    Infeasible,
    NumericalFailure,
    EvUnreachable,
    CapacityInfeasible,
    TooLarge,
    TransportViolation,
    InputError,
};

std::string_view to_string(ErrorKind kind);

/// Base error for every module. `path` points into the offending input
/// document when the error came from parsing (JSON-pointer style).
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message, std::string path = {})
        : std::runtime_error(message), kind_(kind), path_(std::move(path))
    {
    }

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }

private:
    ErrorKind kind_;
    std::string path_;
};

} // namespace swapgrid
