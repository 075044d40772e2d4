#pragma once

#include <stdexcept>
#include <string>

namespace nilm {

/// Base error for the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user input: malformed files, out-of-range arguments, unknown names.
/// The CLI maps this to exit code 2, everything else to 1.
struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Signal too weak/degenerate for the requested measurement.
struct DegenerateSignalError : Error {
    explicit DegenerateSignalError(const std::string& what) : Error(what) {}
};

}  // namespace nilm
