#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migraflow/gazetteer.hpp"
#include "migraflow/record.hpp"

namespace migraflow {

// One optional state per affiliation field, in this fixed slot order.
enum class CandidateSlot : int {
  OrgUnit = 0,
  Institution = 1,
  StreetAddress = 2,
  City = 3,
  Postcode = 4,
};

struct CandidateSet {
  std::array<std::optional<State>, 5> slots{};

  std::optional<State>& operator[](CandidateSlot s) { return slots[static_cast<std::size_t>(s)]; }
  const std::optional<State>& operator[](CandidateSlot s) const {
    return slots[static_cast<std::size_t>(s)];
  }
  int filled() const;
};

// Looks every field up independently. The street address is scanned for
// state names/abbreviations (longest pattern first, word-aligned, rightmost
// hit wins) and, when the postcode field is empty, for a standalone 5-digit
// postal code whose 2-digit prefix fills the postcode slot.
CandidateSet candidates(const AuthorshipRecord& rec, const Gazetteer& g);

// Mode-of-candidates rule: the unique most frequent candidate wins if seen
// at least twice; ties and single detections stay unresolved.
std::optional<State> resolve(const CandidateSet& c);

enum class ResolutionStatus { Resolved, Unresolved, ExcludedForeign };

struct RecordResolution {
  ResolutionStatus status = ResolutionStatus::Unresolved;
  std::optional<State> state;
  CandidateSet candidates;
};

struct CoverageReport {
  std::size_t total = 0;
  std::size_t excluded_foreign = 0;
  std::size_t resolved = 0;
  std::size_t unresolved = 0;

  // Resolved share of the non-excluded records; 0 when nothing is in scope.
  double resolved_fraction() const {
    const auto in_scope = total - excluded_foreign;
    return in_scope == 0 ? 0.0 : static_cast<double>(resolved) / static_cast<double>(in_scope);
  }
};

struct ResolveResult {
  std::map<std::string, RecordResolution> by_record;  // record_id keyed
  CoverageReport coverage;
};

// Records whose country is present and not Mexico are excluded up front.
ResolveResult resolve_corpus(const Corpus& corpus, const Gazetteer& g);

bool is_mexico_country(const std::string& country);

}  // namespace migraflow
