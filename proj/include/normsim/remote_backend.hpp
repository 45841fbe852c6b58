#pragma once

#include <memory>
#include <string>

#include "normsim/provider.hpp"

namespace normsim {

// Talks to an OpenAI-style chat-completions endpoint. Each operation is
// sent as one system message plus one user message (the rendered prompt);
// the assistant reply text is returned verbatim for parsing upstream.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(const RemoteBackendConfig& config);

  std::string name() const override { return "remote"; }

  std::string complete(OperationKind kind, const OperationInput& input,
                       const std::string& rendered_prompt) override;

 private:
  RemoteBackendConfig config_;
  std::string host_;   // scheme://authority
  std::string path_;   // endpoint path under the base URL
  std::string api_key_;
};

}  // namespace normsim
