#pragma once

#include <stdexcept>
#include <string>

namespace styletuner {

// File or registry entry missing.
struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structured input violates its schema; message names the offending field.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Payload exists but cannot be decoded; message names the path.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No JSON object could be located in a model response.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A JSON object was found but does not match the expected contract.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Keyword extraction exhausted its retries; carries the last raw response.
struct ExtractionError : std::runtime_error {
    ExtractionError(const std::string& msg, std::string last_response_)
        : std::runtime_error(msg), last_response(std::move(last_response_)) {}
    std::string last_response;
};

// Attempt to register something that already exists.
struct ConflictError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss; carries the offending step.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, int step_) : std::runtime_error(msg), step(step_) {}
    int step;
};

}  // namespace styletuner
