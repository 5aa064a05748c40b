#pragma once

#include <stdexcept>
#include <string>

namespace mhotv {

// Base of every error thrown by the library. Callers that only care about
// "something was wrong with the inputs" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class GeometryMismatch : public Error {
 public:
  using Error::Error;
};

class NonSymmetricSpectrum : public Error {
 public:
  using Error::Error;
};

class StencilTooLong : public Error {
 public:
  using Error::Error;
};

class InvalidOrder : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrder : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <class E>
[[noreturn]] inline void fail(const std::string& what) {
  throw E(what);
}

}  // namespace detail
}  // namespace mhotv
