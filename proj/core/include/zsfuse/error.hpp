#pragma once

#include <stdexcept>
#include <string>

namespace zsfuse {

enum class ErrorKind {
    usage,       // bad arguments or configuration keys
    format,      // unrecognized file layout (magic, version, schema)
    corruption,  // checksum mismatch, truncated or oversized file
    validation,  // data violates a type invariant (NaN, norm, range)
    config,      // inconsistent inputs, e.g. a class with no references
    degenerate,  // numerically undefined input (zero row, zero weights)
    io,          // filesystem failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Process exit status for an error kind: 1 usage, 2 data/validation, 3 I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace zsfuse
