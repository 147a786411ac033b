#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace deconf {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed schema, unknown variable or level, bad role layout.
struct SchemaError : Error {
    using Error::Error;
};

// Table construction or table-op misuse (negative weights, wrong kind, ...).
struct TableError : Error {
    using Error::Error;
};

// Cell-list CSV problems: missing columns, bad counts, duplicate cells.
struct CsvError : Error {
    using Error::Error;
};

// KL divergence requested where p puts mass outside the support of f.
struct SupportViolation : Error {
    using Error::Error;
};

// Unknown built-in dataset name.
struct UnknownDataset : Error {
    using Error::Error;
};

// Marginal targets that no distribution on the base support can satisfy.
// Carries the name of the constraint that failed and its residual at stop.
struct InfeasibleError : Error {
    std::string constraint;
    double residual;

    InfeasibleError(const std::string& message, std::string constraint_name,
                    double residual_at_stop)
        : Error(message),
          constraint(std::move(constraint_name)),
          residual(residual_at_stop) {}
};

}  // namespace deconf
