#ifndef COTRAIN_ERRORS_HPP
#define COTRAIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cotrain {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration values (bad fold counts, priors not summing to 1, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Malformed records or datasets (duplicate ids, unknown labels, missing sections).
struct DataError : Error {
    using Error::Error;
};

// Raw report text that cannot be segmented into the required sections.
struct ParseError : Error {
    using Error::Error;
};

// Caller broke an API precondition (dimension mismatch, id-set mismatch, ...).
struct ContractError : Error {
    using Error::Error;
};

// Optimization failures (non-finite loss).
struct TrainingError : Error {
    using Error::Error;
};

// Filesystem problems.
struct IoError : Error {
    using Error::Error;
};

} // namespace cotrain

#endif
