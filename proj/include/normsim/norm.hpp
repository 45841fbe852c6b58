#pragma once

#include <cstdint>
#include <compare>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace normsim {

using Tick = std::uint64_t;

constexpr int kUtilityMin = 1;
constexpr int kUtilityMax = 100;

enum class NormKind { descriptive, injunctive };

const char* to_string(NormKind kind);
NormKind norm_kind_from_string(std::string_view token);

struct NormId {
  std::uint64_t value = 0;
  auto operator<=>(const NormId&) const = default;
};

// Activation/validity pair for a norm. Three states are reachable over a
// norm's life: pending (F,F), qualified (T,T) and superseded (F,T). The
// fourth combination (activated but invalid) is rejected at construction,
// so it cannot be represented anywhere downstream.
class NormStatus {
 public:
  NormStatus(bool activated, bool valid);

  static NormStatus pending() { return NormStatus(false, false); }
  static NormStatus qualified_state() { return NormStatus(true, true); }
  static NormStatus superseded() { return NormStatus(false, true); }

  bool activated() const { return activated_; }
  bool valid() const { return valid_; }

  bool operator==(const NormStatus&) const = default;

 private:
  bool activated_;
  bool valid_;
};

// The single qualification predicate: a norm counts as qualified exactly
// when it is both activated and valid.
inline bool is_qualified(const NormStatus& status) {
  return status.activated() && status.valid();
}

// Where a norm came from.
struct CreatedByAgent {};  // authored at setup by a norm entrepreneur
struct FromConversation {
  std::uint64_t conversation_id = 0;
};
struct FromObservation {
  std::uint64_t thought_id = 0;
};
struct SynthesizedFrom {
  std::vector<NormId> members;  // at least two
};

using Provenance =
    std::variant<CreatedByAgent, FromConversation, FromObservation,
                 SynthesizedFrom>;

const char* provenance_tag(const Provenance& provenance);

struct Norm {
  Norm(NormId id, std::string content, int utility, NormKind kind,
       NormStatus status, Provenance provenance, Tick created_tick);

  NormId id;
  std::string content;
  int utility;  // integer in [1, 100]; range-checked at construction
  NormKind kind;
  NormStatus status;
  Provenance provenance;
  Tick created_tick;
};

inline bool is_qualified(const Norm& norm) { return is_qualified(norm.status); }

// A candidate extracted from a conversation or an observation-driven
// thought, before any evaluation has happened.
struct NormativeInformation {
  NormativeInformation(std::string content, NormKind kind, int utility,
                       Provenance source);

  std::string content;
  NormKind kind;
  int utility;
  Provenance source;  // FromConversation or FromObservation only
};

// Lowercases ASCII letters and collapses whitespace runs to single spaces.
// Used as the hard backstop for duplicate detection; semantic duplicates
// are the evaluation pipeline's job.
std::string normalize_content(std::string_view text);

}  // namespace normsim
