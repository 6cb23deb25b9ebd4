#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ltvstream {

// Base for every error raised by the library. Each subclass maps onto one CLI
// exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or specification. `field` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)), detail_(message) {}
  const std::string& field() const noexcept { return field_; }
  // The message without the field prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input stream. `line` is 1-based; 0 when not attributable to a line.
class StreamError : public Error {
 public:
  StreamError(std::size_t line, const std::string& message)
      : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// The category index space provisioned for a feature is full.
class CapacityExhausted : public Error {
 public:
  CapacityExhausted(std::string value, std::size_t capacity)
      : Error("encoder capacity " + std::to_string(capacity) + " exhausted at value '" + value + "'"),
        value_(std::move(value)),
        capacity_(capacity) {}
  const std::string& value() const noexcept { return value_; }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::string value_;
  std::size_t capacity_;
};

class SamplerError : public Error {
 public:
  SamplerError(const std::string& message, std::size_t divergences = 0)
      : Error(message), divergences_(divergences) {}
  std::size_t divergence_count() const noexcept { return divergences_; }

 private:
  std::size_t divergences_;
};

}  // namespace ltvstream
