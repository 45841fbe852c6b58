#include "normsim/provider.hpp"

#include "normsim/errors.hpp"
#include "normsim/prompts.hpp"
#include "normsim/remote_backend.hpp"
#include "normsim/scripted_backend.hpp"

namespace normsim {

void ProviderConfig::validate() const {
  if (max_retries < 0) {
    throw ConfigError("provider max_retries must be >= 0");
  }
  if (backend == BackendKind::scripted) {
    if (!scripted.has_value()) {
      throw ConfigError("scripted backend selected but not configured");
    }
    if (scripted->rule_table_path.empty()) {
      throw ConfigError("scripted backend needs a rule_table path");
    }
  } else {
    if (!remote.has_value()) {
      throw ConfigError("remote backend selected but not configured");
    }
    if (remote->base_url.empty() || remote->model.empty()) {
      throw ConfigError("remote backend needs base_url and model");
    }
    if (remote->temperature < 0.0 || remote->temperature > 2.0) {
      throw ConfigError("remote temperature must lie in [0, 2]");
    }
    if (remote->timeout_ms <= 0) {
      throw ConfigError("remote timeout must be positive");
    }
    if (remote->api_key_env.empty()) {
      throw ConfigError("remote backend needs api_key_env");
    }
  }
}

namespace {

std::unique_ptr<Backend> build_backend(const ProviderConfig& config) {
  config.validate();
  if (config.backend == ProviderConfig::BackendKind::scripted) {
    return std::make_unique<ScriptedBackend>(config.scripted->rule_table_path,
                                             config.scripted->seed);
  }
  return std::make_unique<RemoteBackend>(*config.remote);
}

}  // namespace

Provider::Provider(const ProviderConfig& config)
    : backend_(build_backend(config)), max_retries_(config.max_retries) {
  backend_name_ = backend_->name();
}

Provider::Provider(std::unique_ptr<Backend> backend, int max_retries)
    : backend_(std::move(backend)), max_retries_(max_retries) {
  if (!backend_) throw ConfigError("provider needs a backend");
  if (max_retries_ < 0) throw ConfigError("max_retries must be >= 0");
  backend_name_ = backend_->name();
}

void Provider::set_call_observer(CallObserver observer) {
  observer_ = std::move(observer);
}

InvokeResult Provider::invoke(const OperationInput& input) {
  const std::string base_prompt = render_prompt(input.kind, input);
  std::string last_error;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    std::string prompt = base_prompt;
    if (attempt > 0) prompt += kRetryCorrective;

    ProviderCallRecord record;
    record.kind = input.kind;
    record.attempt = attempt;
    record.prompt_chars = prompt.size();

    std::string raw;
    try {
      raw = backend_->complete(input.kind, input, prompt);
    } catch (const ProviderFailure& failure) {
      record.outcome = "transport_error";
      record.detail = failure.what();
      if (observer_) observer_(record);
      last_error = failure.what();
      continue;
    }
    record.response_chars = raw.size();

    try {
      ParsedResponse parsed = parse_response(input.kind, raw);
      record.outcome = "ok";
      if (observer_) observer_(record);
      return InvokeResult{std::move(parsed.output),
                          std::move(parsed.warnings)};
    } catch (const ParseError& error) {
      record.outcome = "parse_error";
      record.detail = error.what();
      if (observer_) observer_(record);
      last_error = error.what();
    }
  }
  throw ProviderFailure(std::string(to_string(input.kind)) + ": no usable "
                        "reply after " + std::to_string(max_retries_ + 1) +
                        " attempts (last error: " + last_error + ")");
}

}  // namespace normsim
