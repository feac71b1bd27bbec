#pragma once

#include <stdexcept>
#include <string>

namespace perc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or out-of-range parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Allocation would exceed the configured memory cap.
class ResourceError : public Error {
 public:
  ResourceError(const std::string& what, std::size_t required_bytes)
      : Error(what), required_bytes_(required_bytes) {}
  std::size_t required_bytes() const noexcept { return required_bytes_; }

 private:
  std::size_t required_bytes_;
};

// Malformed PERC1 stream.
class ParseError : public Error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, BadHeader, Truncated };
  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// No open vertex where a cluster was requested (closed origin, p = 0, ...).
class EmptyCluster : public Error {
 public:
  using Error::Error;
};

// A documented precondition or postcondition of an operation was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Exact enumeration refused because the instance exceeds the cap.
class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, std::size_t size, std::size_t cap)
      : Error(what), size_(size), cap_(cap) {}
  std::size_t size() const noexcept { return size_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t size_;
  std::size_t cap_;
};

// Iterative solver did not reach the requested residual.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace perc
