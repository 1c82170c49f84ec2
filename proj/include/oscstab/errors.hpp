#pragma once

#include <stdexcept>
#include <string>

namespace oscstab {

// Precondition and validation failures derive from std::invalid_argument,
// runtime failures of a computation derive from std::runtime_error. The CLI
// maps the two families onto exit codes 2 and 3.

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct StepTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Inconclusive : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoRoot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace oscstab
