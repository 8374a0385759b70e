#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace singvolt {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A series or iteration did not reach the requested accuracy.
class AccuracyError : public Error {
public:
    using Error::Error;
};

/// An analytic hypothesis (exponent condition, integrability) is violated.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Evaluation requested exactly at a kernel singularity.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Mesh or weight-table construction failed.
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// Nonlinear iteration failed after all fallbacks.
class IterationError : public Error {
public:
    using Error::Error;
};

/// Local linear solve on the diagonal cell is singular.
class StepError : public Error {
public:
    using Error::Error;
};

/// Least-squares slope fit had too few usable nodes.
class FitError : public Error {
public:
    using Error::Error;
};

/// An operation needed values at censored (blown-up) nodes.
class CensoredError : public Error {
public:
    using Error::Error;
};

/// Spike set cannot be represented on the mesh with the requested measure.
class MeasureMismatchError : public Error {
public:
    using Error::Error;
};

/// Mismatched meshes, dimensions or other caller mistakes.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Problem file could not be parsed; carries the 1-based line number (0 if none).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace singvolt
