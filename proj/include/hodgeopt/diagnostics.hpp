/**
 * Error types and the warning sink shared by every hodgeopt module.
 */
#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace hodgeopt {

/// Malformed input: bad vertex sets, mismatched lengths, out-of-range orders.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Spectral function undefined for the instance (e.g. no non-zero eigenvalue).
class DegenerateInstance : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical routine failed to converge or lost accuracy.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read, parsed or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(const std::string&)>;

namespace detail {
inline WarningHandler& warning_handler()
{
    static WarningHandler handler = [](const std::string& msg) {
        std::cerr << "hodgeopt: warning: " << msg << '\n';
    };
    return handler;
}
} // namespace detail

/// Replaces the process-wide warning sink; returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler handler)
{
    return std::exchange(detail::warning_handler(), std::move(handler));
}

inline void warn(const std::string& msg)
{
    if (detail::warning_handler()) detail::warning_handler()(msg);
}

} // namespace hodgeopt
