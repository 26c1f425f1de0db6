#pragma once

#include <stdexcept>
#include <string>

namespace crt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an input value was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Scenario or calibration file could not be parsed or validated.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The discretized program has no feasible schedule.
class NoFeasibleSchedule : public Error {
public:
    using Error::Error;
};

/// Dose/chemo caps or the chemo budget are not integer multiples of the grid steps.
class GridMisaligned : public Error {
public:
    using Error::Error;
};

/// Brute-force enumeration would exceed the configured schedule count.
class InstanceTooLarge : public Error {
public:
    using Error::Error;
};

/// Calibration system is (numerically) singular.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature did not reach the requested tolerance.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Internal consistency failure, e.g. a broken back-pointer chain.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace crt
