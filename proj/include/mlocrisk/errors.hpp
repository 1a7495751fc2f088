#pragma once

#include <stdexcept>
#include <string>

namespace mlocrisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (sigma, eta) pair outside the region where the risk is finite.
class InvalidParams : public Error {
 public:
  using Error::Error;
};

/// Iterative solver hit its iteration cap before meeting tolerance.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidWitness : public Error {
 public:
  using Error::Error;
};

/// An optimizer iterate became non-finite (usually a step size that is too large).
class DivergedState : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected before any run started.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlocrisk
