#include "normsim/norm_database.hpp"

#include <algorithm>

#include "normsim/errors.hpp"

namespace normsim {

NormDatabase::NormDatabase(std::string owner) : owner_(std::move(owner)) {
  if (owner_.empty()) {
    throw LifecycleError("norm database owner must be non-empty");
  }
}

NormId NormDatabase::append(std::string content, NormKind kind, int utility,
                            NormStatus status, Provenance provenance,
                            Tick tick) {
  NormId id{next_id_++};
  entries_.emplace_back(id, std::move(content), utility, kind, status,
                        std::move(provenance), tick);
  index_by_id_[id.value] = entries_.size() - 1;
  if (is_qualified(status)) {
    const Norm& norm = entries_.back();
    qualified_by_content_[normalize_content(norm.content)] = id;
    qualified_utility_sum_ += utility;
  }
  return id;
}

NormId NormDatabase::admit(const NormativeInformation& info, Tick tick) {
  return append(info.content, info.kind, info.utility, NormStatus::pending(),
                info.source, tick);
}

NormId NormDatabase::admit_synthesis_candidate(std::string content,
                                               NormKind kind, int utility,
                                               std::vector<NormId> members,
                                               Tick tick) {
  if (members.size() < 2) {
    throw LifecycleError("synthesis candidate needs at least two members");
  }
  for (NormId member : members) {
    get(member);  // throws on unknown ids
  }
  return append(std::move(content), kind, utility, NormStatus::pending(),
                SynthesizedFrom{std::move(members)}, tick);
}

NormId NormDatabase::insert_created(std::string content, NormKind kind,
                                    int utility, Tick tick) {
  check_duplicate_backstop(normalize_content(content));
  return append(std::move(content), kind, utility,
                NormStatus::qualified_state(), CreatedByAgent{}, tick);
}

void NormDatabase::check_duplicate_backstop(
    const std::string& normalized) const {
  if (qualified_by_content_.count(normalized) != 0) {
    throw LifecycleError("a qualified norm with content '" + normalized +
                         "' already exists for " + owner_);
  }
}

Norm& NormDatabase::mutable_get(NormId id) {
  auto it = index_by_id_.find(id.value);
  if (it == index_by_id_.end()) {
    throw LifecycleError("unknown norm id " + std::to_string(id.value) +
                         " for " + owner_);
  }
  return entries_[it->second];
}

const Norm& NormDatabase::get(NormId id) const {
  return const_cast<NormDatabase*>(this)->mutable_get(id);
}

const Norm* NormDatabase::find(NormId id) const {
  auto it = index_by_id_.find(id.value);
  return it == index_by_id_.end() ? nullptr : &entries_[it->second];
}

void NormDatabase::qualify(NormId id) {
  Norm& norm = mutable_get(id);
  if (norm.status != NormStatus::pending()) {
    throw LifecycleError("norm " + std::to_string(id.value) +
                         " is not pending; only pending entries qualify");
  }
  const std::string normalized = normalize_content(norm.content);
  check_duplicate_backstop(normalized);
  norm.status = NormStatus::qualified_state();
  qualified_by_content_[normalized] = id;
  qualified_utility_sum_ += norm.utility;
}

void NormDatabase::apply_synthesis(NormId abstract_id,
                                   const std::vector<NormId>& members) {
  if (members.size() < 2) {
    throw LifecycleError("synthesis needs at least two member norms");
  }
  const Norm& abstract = get(abstract_id);
  if (!is_qualified(abstract)) {
    throw LifecycleError("abstract norm must be qualified before synthesis "
                         "is applied");
  }
  for (NormId member : members) {
    if (member == abstract_id) {
      throw LifecycleError("synthesis member list references the abstract "
                           "norm itself");
    }
    if (!is_qualified(get(member))) {
      throw LifecycleError("synthesis member " + std::to_string(member.value) +
                           " is not qualified");
    }
  }
  for (NormId member : members) {
    Norm& norm = mutable_get(member);
    norm.status = NormStatus::superseded();
    qualified_by_content_.erase(normalize_content(norm.content));
    qualified_utility_sum_ -= norm.utility;
  }
  mutable_get(abstract_id).provenance = SynthesizedFrom{members};
}

std::vector<Norm> NormDatabase::qualified_set() const {
  std::vector<Norm> result;
  for (const Norm& norm : entries_) {
    if (is_qualified(norm)) result.push_back(norm);
  }
  return result;
}

}  // namespace normsim
