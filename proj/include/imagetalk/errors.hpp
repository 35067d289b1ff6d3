#pragma once

#include <stdexcept>
#include <string>

namespace imagetalk {

enum class ErrorCode {
    invalid_argument,   // value violates a type invariant
    precondition,       // operation called in a state it does not accept
    not_found,
    version_conflict,
    bad_index,
    unknown_target,
    schema,             // persisted or wire payload fails validation
    io,
    backend_timeout,
    backend_error,
    malformed_response,
    empty_completion,
    undefined_metric,
    no_vector,
    busy,               // concurrent mutation of one session
};

const char* to_string(ErrorCode code);

// Single exception type for the library. `field` names the offending input
// field when there is one, so the service can report it back.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {})
        : std::runtime_error(message), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

} // namespace imagetalk
