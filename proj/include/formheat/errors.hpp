#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace formheat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed mesh or config text. Carries the 1-based line number (0 if unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A structural invariant of an input object does not hold.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Zero-length edges, irregular chart points and similar.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature could not reach the requested tolerance.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double achieved)
        : Error(what + " (achieved relative tolerance " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Coefficient sampled outside its declared envelope.
class EnvelopeError : public Error {
public:
    using Error::Error;
};

/// Linear or eigen solver failed to converge.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Parameters outside the range covered by the well-posedness theory.
class OutsideTheoryError : public Error {
public:
    using Error::Error;
};

class UnsupportedScenarioError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace formheat
