#include "imagetalk/errors.hpp"

namespace imagetalk {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::version_conflict: return "version_conflict";
    case ErrorCode::bad_index: return "bad_index";
    case ErrorCode::unknown_target: return "unknown_target";
    case ErrorCode::schema: return "schema";
    case ErrorCode::io: return "io";
    case ErrorCode::backend_timeout: return "backend_timeout";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::malformed_response: return "malformed_response";
    case ErrorCode::empty_completion: return "empty_completion";
    case ErrorCode::undefined_metric: return "undefined_metric";
    case ErrorCode::no_vector: return "no_vector";
    case ErrorCode::busy: return "busy";
    }
    return "unknown";
}

} // namespace imagetalk
