#pragma once

#include <stdexcept>
#include <string>

namespace kbfid {

/// Base class for every failure raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mismatched dimensions between matrices, vectors, or declared metadata.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid configuration: bad quadrature rule, incompatible horizon, bad ranges.
struct ConfigError : Error {
    using Error::Error;
};

/// A mathematical precondition does not hold (e.g. singular equilibrium).
struct DomainError : Error {
    using Error::Error;
};

/// Non-finite values where finite data is required.
struct DataError : Error {
    using Error::Error;
};

/// Integration or training produced non-finite state.
struct DivergenceError : Error {
    DivergenceError(const std::string& what, double when, long index = -1)
        : Error(what), time(when), step(index) {}
    double time;  // simulation time (or -1 when not applicable)
    long step;    // step or epoch index (or -1)
};

/// Malformed, truncated, or unsupported files.
struct ParseError : Error {
    using Error::Error;
};

/// An API contract was violated by the caller (e.g. missing forward cache).
struct ContractError : Error {
    using Error::Error;
};

}  // namespace kbfid
