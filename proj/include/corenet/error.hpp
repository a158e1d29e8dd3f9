#ifndef CORENET_ERROR_HPP
#define CORENET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace corenet {

// Base for everything the library throws. The CLI maps subclasses onto
// exit codes: validation failures -> 1, runtime failures -> 2, oracle
// mismatches -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Validation-class errors (bad inputs, malformed structures, bad configs).
class ValidationError : public Error {
public:
    using Error::Error;
};

class CycleError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConnectivityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class MergeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidSpec : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyHistogram : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EmptyMask : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotSeriesParallel : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnsupportedLayer : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Runtime-class errors.
class ZeroMassBranch : public Error {
public:
    using Error::Error;
};

class TooLarge : public Error {
public:
    using Error::Error;
};

class Overflow : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

class GraphStateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// DP vs. enumeration disagreement; carries the offending graph serialized
// as JSON so the case can be replayed.
class OracleMismatch : public Error {
public:
    OracleMismatch(const std::string& what, std::string counterexample_json)
        : Error(what), counterexample_(std::move(counterexample_json)) {}

    const std::string& counterexample() const { return counterexample_; }

private:
    std::string counterexample_;
};

}  // namespace corenet

#endif  // CORENET_ERROR_HPP
