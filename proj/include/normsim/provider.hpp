#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "normsim/operations.hpp"

namespace normsim {

struct ScriptedBackendConfig {
  std::string rule_table_path;
  std::uint64_t seed = 0;
};

struct RemoteBackendConfig {
  std::string base_url;   // e.g. https://api.example.com/v1
  std::string model;
  double temperature = 0.7;   // [0, 2]
  int timeout_ms = 30000;     // > 0
  std::string api_key_env;    // environment variable holding the key
};

struct ProviderConfig {
  enum class BackendKind { scripted, remote };

  BackendKind backend = BackendKind::scripted;
  std::optional<ScriptedBackendConfig> scripted;
  std::optional<RemoteBackendConfig> remote;
  int max_retries = 3;  // re-issues after the first attempt

  void validate() const;  // throws ConfigError
};

// A completion source. Implementations receive both the structured input
// and the rendered prompt; the remote backend forwards the prompt to a
// chat-completions endpoint, the scripted backend computes a reply from the
// structured slots. Either way the reply is a JSON document that flows
// through parse_response, so both paths exercise the same parsing layer.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  // Throws ProviderFailure on transport-level problems.
  virtual std::string complete(OperationKind kind, const OperationInput& input,
                               const std::string& rendered_prompt) = 0;
};

// One record per attempt, surfaced so the engine can log provider traffic.
struct ProviderCallRecord {
  OperationKind kind;
  int attempt = 0;  // 0-based
  std::string outcome;  // "ok", "parse_error" or "transport_error"
  std::size_t prompt_chars = 0;
  std::size_t response_chars = 0;
  std::string detail;
};

using CallObserver = std::function<void(const ProviderCallRecord&)>;

struct InvokeResult {
  OperationOutput output;
  std::vector<std::string> warnings;
};

class Provider {
 public:
  // Builds the backend described by the config. Throws ConfigError for
  // invalid settings and ProviderFailure when the backend cannot be set up
  // (unreadable rule table, missing API key).
  explicit Provider(const ProviderConfig& config);

  // Test seam: run against an arbitrary backend.
  Provider(std::unique_ptr<Backend> backend, int max_retries);

  // render -> complete -> parse, re-issuing on malformed output with a
  // fixed corrective instruction appended, up to max_retries extra
  // attempts. Every attempt is reported to the call observer. Throws
  // ProviderFailure once attempts are exhausted.
  InvokeResult invoke(const OperationInput& input);

  void set_call_observer(CallObserver observer);

  int max_retries() const { return max_retries_; }
  const std::string& backend_name() const { return backend_name_; }

 private:
  std::unique_ptr<Backend> backend_;
  int max_retries_;
  std::string backend_name_;
  CallObserver observer_;
};

}  // namespace normsim
