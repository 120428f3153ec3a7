#pragma once

#include <stdexcept>
#include <string>

namespace mgproto {

/// Base class for all library errors.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text or file (taxonomy, CSV, JSON).
class ParseError : public Error
{
public:
  using Error::Error;
};

/// Input is well-formed but violates a structural contract
/// (shape mismatch, unknown class, invalid taxonomy, bad config).
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// Numerical failure: degenerate geometry, divergence, non-finite values.
class NumericError : public Error
{
public:
  using Error::Error;
};

} // namespace mgproto
