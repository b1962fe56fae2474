#pragma once

#include <stdexcept>
#include <string>

namespace mmfnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad ladder, bad split ratios, unknown config keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DivisibilityError : public ConfigError {
public:
    DivisibilityError(long segment_length, long length)
        : ConfigError("segment length " + std::to_string(segment_length) +
                      " does not divide length " + std::to_string(length)),
          segment_length_(segment_length) {}

    long segment_length() const noexcept { return segment_length_; }

private:
    long segment_length_;
};

class EmptyLadderError : public ConfigError {
public:
    EmptyLadderError() : ConfigError("scale ladder is empty") {}
};

/// Problems with the input data itself (files, values, lengths).
class DataError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class MissingValueError : public DataError {
public:
    using DataError::DataError;
};

class ChannelMismatchError : public DataError {
public:
    using DataError::DataError;
};

class EmptySplitError : public DataError {
public:
    using DataError::DataError;
};

class EmptyInputError : public DataError {
public:
    EmptyInputError() : DataError("transform input is empty") {}
};

/// Tensor shapes disagree. Always a programming error.
class ShapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A gradient contained NaN or Inf; training has diverged.
class NonFiniteGradientError : public Error {
public:
    using Error::Error;
};

}  // namespace mmfnet
