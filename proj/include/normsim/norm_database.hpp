#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "normsim/norm.hpp"

namespace normsim {

// Per-agent norm store. Entries are append-only: a norm is never removed
// and its id is never reused. The only legal transitions are
// pending -> qualified (via qualify) and qualified -> superseded (via
// apply_synthesis). At most one qualified entry may carry a given
// normalized content at any time.
class NormDatabase {
 public:
  explicit NormDatabase(std::string owner);

  // Stores identified normative information as a pending (F,F) entry.
  NormId admit(const NormativeInformation& info, Tick tick);

  // Stores an abstract candidate produced by synthesis as pending (F,F).
  NormId admit_synthesis_candidate(std::string content, NormKind kind,
                                   int utility, std::vector<NormId> members,
                                   Tick tick);

  // Inserts an entrepreneur-authored norm, qualified from birth.
  NormId insert_created(std::string content, NormKind kind, int utility,
                        Tick tick);

  // pending -> qualified. Throws LifecycleError on unknown ids, entries not
  // in the pending state, or when an identical normalized content is
  // already qualified (the duplicate backstop).
  void qualify(NormId id);

  // Deactivates the member norms of a synthesis: each member goes
  // qualified -> superseded. The abstract entry must itself be qualified,
  // must not appear among the members, and needs at least two members.
  void apply_synthesis(NormId abstract_id, const std::vector<NormId>& members);

  // Qualified entries in insertion order.
  std::vector<Norm> qualified_set() const;

  // Sum of utilities over the qualified set; maintained incrementally.
  int utility_sum() const { return qualified_utility_sum_; }

  const Norm& get(NormId id) const;
  const Norm* find(NormId id) const;

  const std::vector<Norm>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& owner() const { return owner_; }

 private:
  NormId append(std::string content, NormKind kind, int utility,
                NormStatus status, Provenance provenance, Tick tick);
  Norm& mutable_get(NormId id);
  void check_duplicate_backstop(const std::string& normalized) const;

  std::string owner_;
  std::vector<Norm> entries_;
  std::map<std::uint64_t, std::size_t> index_by_id_;
  std::map<std::string, NormId> qualified_by_content_;
  std::uint64_t next_id_ = 1;
  int qualified_utility_sum_ = 0;
};

}  // namespace normsim
