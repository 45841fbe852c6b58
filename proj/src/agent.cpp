#include "normsim/agent.hpp"

namespace normsim {

std::string Conversation::rendered_transcript() const {
  std::string text;
  for (const auto& turn : turns) {
    text += turn.speaker;
    text += ": ";
    text += turn.text;
    text += '\n';
  }
  return text;
}

nlohmann::json Conversation::transcript_json() const {
  nlohmann::json transcript = nlohmann::json::array();
  for (const auto& turn : turns) {
    transcript.push_back({{"speaker", turn.speaker}, {"text", turn.text}});
  }
  return transcript;
}

AgentRuntime::AgentRuntime(AgentConfig config, int index,
                           std::size_t buffer_cap)
    : config_(std::move(config)),
      index_(index),
      buffer_cap_(buffer_cap == 0 ? 1 : buffer_cap),
      description_(config_.description(index)),
      norms_(config_.name),
      current_location_(config_.location) {}

nlohmann::json AgentRuntime::qualified_norms_json() const {
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& norm : norms_.qualified_set()) {
    norms.push_back({{"content", norm.content},
                     {"kind", to_string(norm.kind)},
                     {"utility", norm.utility}});
  }
  return norms;
}

void AgentRuntime::push_observation(Observation observation) {
  if (observation_buffer_.size() >= buffer_cap_) {
    observation_buffer_.erase(observation_buffer_.begin());
  }
  observation_buffer_.push_back(std::move(observation));
}

void AgentRuntime::set_current_action(ScheduledAction action, Tick until) {
  current_action_ = std::move(action);
  current_action_until_ = until;
}

}  // namespace normsim
