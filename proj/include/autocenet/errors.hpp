#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace autocenet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or volume shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameters, specs or configuration files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// API misuse (backward on a non-scalar, predicting with an uninitialized network...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Inputs that are well-formed but cannot be processed (empty datasets, missing files).
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed binary file. Carries the byte offset at which decoding failed.
class FormatError : public DataError {
public:
    FormatError(const std::string& what, std::size_t offset)
        : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Non-finite values appeared during training or evaluation.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace autocenet
