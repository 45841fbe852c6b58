#pragma once

#include <stdexcept>
#include <string>

namespace normsim {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid scenario/provider configuration or bad user input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Illegal norm state transition or malformed lifecycle request.
class LifecycleError : public Error {
 public:
  using Error::Error;
};

// Structured output from a backend did not match the operation schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Backend could not produce usable output (transport failure, retry
// exhaustion, missing credentials).
class ProviderFailure : public Error {
 public:
  using Error::Error;
};

// Event log violates the append-only contract or fails validation.
class TraceError : public Error {
 public:
  using Error::Error;
};

}  // namespace normsim
