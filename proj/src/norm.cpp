#include "normsim/norm.hpp"

#include <cctype>

#include "normsim/errors.hpp"

namespace normsim {

const char* to_string(NormKind kind) {
  return kind == NormKind::descriptive ? "descriptive" : "injunctive";
}

NormKind norm_kind_from_string(std::string_view token) {
  if (token == "descriptive") return NormKind::descriptive;
  if (token == "injunctive") return NormKind::injunctive;
  throw ParseError("unknown norm kind token: '" + std::string(token) + "'");
}

NormStatus::NormStatus(bool activated, bool valid)
    : activated_(activated), valid_(valid) {
  if (activated_ && !valid_) {
    throw LifecycleError(
        "norm status (activated=true, valid=false) is not a legal state");
  }
}

const char* provenance_tag(const Provenance& provenance) {
  switch (provenance.index()) {
    case 0: return "created";
    case 1: return "conversation";
    case 2: return "observation";
    default: return "synthesized";
  }
}

namespace {

void check_utility(int utility) {
  if (utility < kUtilityMin || utility > kUtilityMax) {
    throw LifecycleError("norm utility " + std::to_string(utility) +
                         " outside [1, 100]");
  }
}

}  // namespace

Norm::Norm(NormId id, std::string content, int utility, NormKind kind,
           NormStatus status, Provenance provenance, Tick created_tick)
    : id(id),
      content(std::move(content)),
      utility(utility),
      kind(kind),
      status(status),
      provenance(std::move(provenance)),
      created_tick(created_tick) {
  if (this->content.empty()) {
    throw LifecycleError("norm content must be non-empty");
  }
  check_utility(utility);
  if (const auto* synth = std::get_if<SynthesizedFrom>(&this->provenance)) {
    if (synth->members.size() < 2) {
      throw LifecycleError("synthesized norm needs at least two members");
    }
  }
}

NormativeInformation::NormativeInformation(std::string content, NormKind kind,
                                           int utility, Provenance source)
    : content(std::move(content)),
      kind(kind),
      utility(utility),
      source(std::move(source)) {
  if (this->content.empty()) {
    throw LifecycleError("normative information content must be non-empty");
  }
  check_utility(utility);
  if (!std::holds_alternative<FromConversation>(this->source) &&
      !std::holds_alternative<FromObservation>(this->source)) {
    throw LifecycleError(
        "normative information must originate from a conversation or an "
        "observation");
  }
}

std::string normalize_content(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace normsim
