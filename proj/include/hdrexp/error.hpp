#pragma once

#include <stdexcept>
#include <string>

namespace hdrexp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented contract (bad metadata, shapes, files).
class DataError : public Error {
 public:
  using Error::Error;
};

class InvalidMetadata : public DataError {
 public:
  using DataError::DataError;
};

class MissingMetadata : public DataError {
 public:
  using DataError::DataError;
};

class ShapeMismatch : public DataError {
 public:
  using DataError::DataError;
};

class FileReadError : public DataError {
 public:
  using DataError::DataError;
};

class FileWriteError : public DataError {
 public:
  using DataError::DataError;
};

/// A numeric argument is outside the domain of a formula (e.g. log of y <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Requested ISO is not part of a noise profile.
class UnknownIso : public DataError {
 public:
  using DataError::DataError;
};

/// The exposure graph is disconnected and no prior can pin the free exposures.
class UnsolvableSystem : public Error {
 public:
  using Error::Error;
};

}  // namespace hdrexp
