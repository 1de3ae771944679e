#pragma once

#include <stdexcept>
#include <string>

namespace pet {

/// Base of every error thrown by the co-simulation library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class KernelError : public Error {
public:
  using Error::Error;
};

/// Raised when device accounting contradicts a market result (a dispatch bug).
class AccountingError : public Error {
public:
  using Error::Error;
};

} // namespace pet
