#pragma once

#include <stdexcept>
#include <string>

namespace isac {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Index lists that break the ResourceAssignment invariants.
class AssignmentError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation (empty list, k > n).
class DomainError : public Error {
public:
    using Error::Error;
};

// Request exceeds an enumeration guard or the size of an index pool.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Index set with zero variance; the corresponding CRB is infinite.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Instance violates a structural constraint (unequal counts for interleaving, ...).
class ConstraintError : public Error {
public:
    using Error::Error;
};

// Data symbol too close to zero to be compensated.
class CompensationError : public Error {
public:
    using Error::Error;
};

// Two UEs share a subcarrier, so no interference-free compensator exists.
class OverlapError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Not enough snapshots to separate the requested number of sources.
class SnapshotError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace isac
