#pragma once

#include <stdexcept>
#include <string>

namespace modseg {

// Base for all library errors. Subclasses pick the failure domain so the CLI
// can map them onto exit codes (usage/config/io -> 2, numeric -> 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

// Divergence / non-finite values during optimization or gradcheck.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace modseg
