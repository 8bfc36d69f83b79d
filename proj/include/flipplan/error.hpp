#pragma once

#include <stdexcept>
#include <string>

namespace flipplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad file contents, violated preconditions.
class InputError : public Error {
public:
    using Error::Error;
};

/// The task cannot be completed (coverage gap, no consistent assignment,
/// exhausted alternatives). Maps to CLI exit code 2.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

}  // namespace flipplan
