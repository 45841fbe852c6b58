#include "normsim/remote_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "normsim/errors.hpp"
#include "normsim/prompts.hpp"

namespace normsim {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string host;  // scheme://authority
  std::string path;  // leading path under the authority, no trailing slash
};

SplitUrl split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ProviderFailure("remote base_url must include a scheme: " +
                          base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  SplitUrl split;
  if (path_start == std::string::npos) {
    split.host = base_url;
  } else {
    split.host = base_url.substr(0, path_start);
    split.path = base_url.substr(path_start);
  }
  while (!split.path.empty() && split.path.back() == '/') {
    split.path.pop_back();
  }
  return split;
}

}  // namespace

RemoteBackend::RemoteBackend(const RemoteBackendConfig& config)
    : config_(config) {
  const SplitUrl split = split_base_url(config.base_url);
  if (split.host.rfind("https://", 0) == 0) {
    throw ProviderFailure(
        "remote backend is built without TLS support; use an http:// "
        "endpoint or a local gateway");
  }
  host_ = split.host;
  path_ = split.path + "/chat/completions";
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ProviderFailure("environment variable " + config.api_key_env +
                          " is not set; it must hold the API key");
  }
  api_key_ = key;
}

std::string RemoteBackend::complete(OperationKind kind,
                                    const OperationInput& input,
                                    const std::string& rendered_prompt) {
  (void)kind;
  (void)input;
  httplib::Client client(host_);
  const auto seconds = config_.timeout_ms / 1000;
  const auto microseconds = (config_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(seconds, microseconds);
  client.set_read_timeout(seconds, microseconds);
  client.set_write_timeout(seconds, microseconds);
  client.set_default_headers({{"Authorization", "Bearer " + api_key_}});

  const json body = {
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"messages",
       json::array({json{{"role", "system"}, {"content", kSystemMessage}},
                    json{{"role", "user"}, {"content", rendered_prompt}}})}};

  auto result = client.Post(path_, body.dump(), "application/json");
  if (!result) {
    throw ProviderFailure("remote request failed: " +
                          httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw ProviderFailure("remote endpoint returned HTTP " +
                          std::to_string(result->status));
  }
  json parsed;
  try {
    parsed = json::parse(result->body);
  } catch (const json::exception& e) {
    throw ProviderFailure("remote endpoint sent invalid JSON: " +
                          std::string(e.what()));
  }
  if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
      parsed["choices"].empty()) {
    throw ProviderFailure("remote reply is missing choices");
  }
  const json& message = parsed["choices"][0].value("message", json::object());
  if (!message.contains("content") || !message["content"].is_string()) {
    throw ProviderFailure("remote reply is missing message content");
  }
  return message["content"].get<std::string>();
}

}  // namespace normsim
