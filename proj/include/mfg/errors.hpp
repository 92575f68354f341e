#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

// Base for everything thrown by this library, so callers can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : Error {
    using Error::Error;
};

// Linear-algebra failures
struct SingularMatrixError : Error {
    using Error::Error;
};
struct RankDeficientError : Error {
    RankDeficientError(const std::string& what, std::size_t achieved_, std::size_t required_)
        : Error(what), achieved(achieved_), required(required_) {}
    std::size_t achieved = 0;
    std::size_t required = 0;
};
struct ConvergenceError : Error {  // iterative eigen/svd kernel did not settle
    using Error::Error;
};
struct SingularPencilError : Error {
    using Error::Error;
};

// Riccati / spectral preconditions
struct NotStabilizingError : Error {
    using Error::Error;
};
struct NotCSplittingError : Error {
    using Error::Error;
};
struct NotGraphSubspaceError : Error {
    using Error::Error;
};

// Simulation / data pipeline
struct NonfiniteStateError : Error {
    NonfiniteStateError(const std::string& what, double at_time_) : Error(what), at_time(at_time_) {}
    double at_time = 0.0;
};
struct WindowOutOfRangeError : Error {
    using Error::Error;
};
struct GridMismatchError : Error {
    using Error::Error;
};

// Configuration
struct ValidationError : Error {
    ValidationError(const std::string& what, std::string field_) : Error(what), field(std::move(field_)) {}
    std::string field;  // dotted path of the offending entry, e.g. "model.R"
};
struct ParseError : Error {
    using Error::Error;
};

}  // namespace mfg
