#pragma once

#include <stdexcept>
#include <string>

namespace cwdsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or unknown configuration (scenario files, policy/case identifiers).
class ConfigError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// Car-following evaluated with a non-positive gap.
class CollisionError : public Error {
public:
    using Error::Error;
};

class ObservationError : public Error {
public:
    using Error::Error;
};

// Malformed data files (emission tables, trajectories, pair files).
class DataError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

// Engine state became physically inconsistent (overlap, SOC out of bounds).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace cwdsim
