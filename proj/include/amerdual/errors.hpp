#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace amerdual {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// User-side problems: malformed files, invalid trees, bad dimensions.
class InputError : public Error {
public:
    using Error::Error;
};

/// Model pathologies: arbitrage, empty calibrated set, unbounded hedging problems.
class ArbitrageError : public Error {
public:
    using Error::Error;
};

/// Scale limits, e.g. too many stopping rules to enumerate.
class ScaleError : public Error {
public:
    using Error::Error;
};

class MalformedProblem : public InputError {
public:
    using InputError::InputError;
};

class MalformedInput : public InputError {
public:
    using InputError::InputError;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class UnboundedBelow : public ArbitrageError {
public:
    using ArbitrageError::ArbitrageError;
};

class NoCalibratedMeasure : public ArbitrageError {
public:
    using ArbitrageError::ArbitrageError;
};

class NotCalibrated : public ArbitrageError {
public:
    using ArbitrageError::ArbitrageError;
};

class DimensionUnsupported : public InputError {
public:
    using InputError::InputError;
};

class SupportMismatch : public InputError {
public:
    using InputError::InputError;
};

class NoStopFound : public Error {
public:
    using Error::Error;
};

class EnumerationCapExceeded : public ScaleError {
public:
    EnumerationCapExceeded(std::uint64_t estimate, std::uint64_t cap)
        : ScaleError("stopping-rule enumeration needs " + std::to_string(estimate) +
                     " rules, cap is " + std::to_string(cap)),
          count_estimate(estimate) {}
    std::uint64_t count_estimate;
};

}  // namespace amerdual
