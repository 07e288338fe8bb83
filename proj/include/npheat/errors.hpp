#ifndef NPHEAT_ERRORS_HPP
#define NPHEAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace npheat {

// Bad user input: config files, field/network data files, CLI arguments.
// The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failure of the numerics at run time (solver breakdown, NaN fields, ...).
// The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace npheat

#endif
