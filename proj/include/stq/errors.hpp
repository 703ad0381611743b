#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stq {

/// Base of every error the library throws. `code` is a short, stable,
/// kebab-case identifier (e.g. "dangling-endpoint") that callers and the CLI
/// can switch on; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Malformed input: bad arguments, schema violations, precondition failures.
class InputError : public Error {
public:
    using Error::Error;
};

/// The numerics ran but the physics does not support the request
/// (no sign change, near-resonant labels, unreachable coupling, ...).
class PhysicsError : public Error {
public:
    using Error::Error;
};

}  // namespace stq
