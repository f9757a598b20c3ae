#pragma once

#include <stdexcept>
#include <string>

namespace surgiatm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scalar argument (even window size, negative eta, zero dimension...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Raster shapes that must agree do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Values outside the admissible range of a typed container or operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// File decodes but is not an 8-bit RGB or grayscale raster.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Degenerate sample set handed to a fitter or correlation.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Paired directories do not line up by filename.
class PairingError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Use of a released or unknown state handle.
class LifecycleError : public Error {
 public:
  using Error::Error;
};

}  // namespace surgiatm
