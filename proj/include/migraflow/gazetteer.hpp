#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migraflow/state.hpp"
#include "migraflow/text.hpp"

namespace migraflow {

// Lookup tables mapping affiliation tokens to states. Keys are stored
// normalized; loaders reject duplicate keys that disagree on the state.
//
// CSV schema: kind,key,state_code with kind in
// {city, postcode_prefix, institution, org_unit, state_pattern}.
// load_dir reads every *.csv in a directory so the tables can be split
// across files and edited independently.
class Gazetteer {
 public:
  static Gazetteer load_dir(const std::string& dir,
                            const AbbreviationTable& abbrev = AbbreviationTable::builtin_default());
  static Gazetteer load_csv(const std::string& path,
                            const AbbreviationTable& abbrev = AbbreviationTable::builtin_default());

  void add(const std::string& kind, const std::string& key, State state);

  std::optional<State> city(const std::string& normalized_key) const;
  std::optional<State> institution(const std::string& normalized_key) const;
  std::optional<State> org_unit(const std::string& normalized_key) const;
  std::optional<State> postcode_prefix(const std::string& two_digits) const;

  // State name/abbreviation patterns for address scanning, longest first.
  const std::vector<std::pair<std::string, State>>& state_patterns() const {
    return patterns_;
  }

  const std::map<std::string, State>& cities() const { return city_; }
  const std::map<std::string, State>& institutions() const { return institution_; }
  const std::map<std::string, State>& org_units() const { return org_unit_; }
  const std::map<std::string, State>& postcode_prefixes() const { return postcode_; }

  const AbbreviationTable& abbreviations() const { return abbrev_; }

  // Checks the invariants described above; throws on violation.
  void validate() const;

  // Sample entries for one state, used by the synthetic generator.
  struct StateVocabulary {
    std::vector<std::string> cities;
    std::vector<std::string> institutions;
    std::vector<std::string> org_units;
    std::vector<std::string> postcode_prefixes;
    std::vector<std::string> patterns;
  };
  StateVocabulary vocabulary_for(State s) const;

 private:
  std::optional<State> lookup(const std::map<std::string, State>& table,
                              const std::string& key) const;

  std::map<std::string, State> city_;
  std::map<std::string, State> institution_;
  std::map<std::string, State> org_unit_;
  std::map<std::string, State> postcode_;
  std::vector<std::pair<std::string, State>> patterns_;
  AbbreviationTable abbrev_ = AbbreviationTable::builtin_default();
};

}  // namespace migraflow
