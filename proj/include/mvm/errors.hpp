#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand extents do not line up (tensor/matrix shapes, factor counts).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An instance or model does not conform to a view schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or argument value (probabilities, sigma, labels, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A brute-force oracle was asked to enumerate more than its cap.
class OracleScaleError : public Error {
public:
    using Error::Error;
};

/// The global bias is only defined for augmented models.
class UndefinedBiasError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given input (e.g. AUC on one class).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Dataset text could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Model file is malformed (truncated payload, bad shape, non-finite value).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Model file header names an unknown format or version.
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

/// SGD produced a non-finite parameter. epoch() is 1-based, 0 if unknown.
class DivergenceError : public Error {
public:
    explicit DivergenceError(std::size_t epoch)
        : Error(epoch == 0 ? std::string("training diverged: non-finite parameter update")
                           : "training diverged at epoch " + std::to_string(epoch) +
                                 ": non-finite parameter update"),
          epoch_(epoch) {}

    [[nodiscard]] std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace mvm
