#pragma once

#include <stdexcept>
#include <string>

namespace saddlesim {

//! Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DisconnectedGraph : Error {
  using Error::Error;
};

struct OverlapError : Error {
  using Error::Error;
};

struct DegenerateChain : Error {
  using Error::Error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

struct VertexMismatch : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct SequenceExhausted : Error {
  using Error::Error;
};

struct NonFiniteIterate : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace saddlesim
