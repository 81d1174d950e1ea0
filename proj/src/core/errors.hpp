#pragma once

#include <stdexcept>
#include <string>

namespace d3fcnn {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape, axis or argument contract violations.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Bad or inconsistent run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Dataset, image or protocol problems.
class DataError : public Error {
public:
  using Error::Error;
};

/// Structurally broken image file.
class BadImageError : public DataError {
public:
  using DataError::DataError;
};

/// Image decodes but is not 16-bit single-channel.
class BitDepthError : public DataError {
public:
  using DataError::DataError;
};

/// Checkpoint file problems. Subclasses distinguish the failure kind.
class CheckpointError : public Error {
public:
  using Error::Error;
};

class BadMagicError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

class VersionError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

class TruncatedFileError : public CheckpointError {
public:
  using CheckpointError::CheckpointError;
};

/// Filesystem failures outside checkpoints.
class IoError : public Error {
public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace d3fcnn
