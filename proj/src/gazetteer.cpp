#include "migraflow/gazetteer.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "migraflow/csv.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

void Gazetteer::add(const std::string& kind, const std::string& raw_key, State state) {
  std::map<std::string, State>* table = nullptr;
  if (kind == "city") table = &city_;
  else if (kind == "institution") table = &institution_;
  else if (kind == "org_unit") table = &org_unit_;
  else if (kind == "postcode_prefix") table = &postcode_;
  else if (kind != "state_pattern")
    throw Error("GAZETTEER_BAD_KIND", "unknown gazetteer kind: " + kind);

  std::string key;
  if (kind == "postcode_prefix") {
    key = raw_key;
    if (key.size() != 2 || !std::isdigit(static_cast<unsigned char>(key[0])) ||
        !std::isdigit(static_cast<unsigned char>(key[1])))
      throw Error("GAZETTEER_BAD_PREFIX", "postcode prefixes are 2 digits: " + raw_key);
  } else {
    key = normalize_text(raw_key, abbrev_);
    if (key.empty())
      throw Error("GAZETTEER_EMPTY_KEY", "key normalizes to empty: " + raw_key);
  }

  if (kind == "state_pattern") {
    for (const auto& [k, s] : patterns_)
      if (k == key && s != state)
        throw Error("GAZETTEER_CONFLICT", "pattern maps to two states: " + key);
    patterns_.emplace_back(key, state);
    std::stable_sort(patterns_.begin(), patterns_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    return;
  }
  const auto it = table->find(key);
  if (it != table->end() && it->second != state)
    throw Error("GAZETTEER_CONFLICT", kind + " key maps to two states: " + key);
  (*table)[key] = state;
}

std::optional<State> Gazetteer::lookup(const std::map<std::string, State>& table,
                                       const std::string& key) const {
  const auto it = table.find(key);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<State> Gazetteer::city(const std::string& key) const { return lookup(city_, key); }
std::optional<State> Gazetteer::institution(const std::string& key) const {
  return lookup(institution_, key);
}
std::optional<State> Gazetteer::org_unit(const std::string& key) const {
  return lookup(org_unit_, key);
}
std::optional<State> Gazetteer::postcode_prefix(const std::string& two_digits) const {
  return lookup(postcode_, two_digits);
}

Gazetteer Gazetteer::load_csv(const std::string& path, const AbbreviationTable& abbrev) {
  Gazetteer g;
  g.abbrev_ = abbrev;
  const auto table = csv::read(path);
  const int c_kind = table.column("kind");
  const int c_key = table.column("key");
  const int c_state = table.column("state_code");
  if (c_kind < 0 || c_key < 0 || c_state < 0)
    throw Error("GAZETTEER_SCHEMA", "gazetteer needs kind,key,state_code columns: " + path);
  for (const auto& row : table.rows) {
    const auto state = state_from_code(row[static_cast<std::size_t>(c_state)]);
    if (!state)
      throw Error("GAZETTEER_BAD_STATE",
                  "unknown state code: " + row[static_cast<std::size_t>(c_state)]);
    g.add(row[static_cast<std::size_t>(c_kind)], row[static_cast<std::size_t>(c_key)], *state);
  }
  return g;
}

Gazetteer Gazetteer::load_dir(const std::string& dir, const AbbreviationTable& abbrev) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  if (!fs::is_directory(dir))
    throw Error("GAZETTEER_NO_DIR", "gazetteer directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("GAZETTEER_EMPTY_DIR", "no .csv files in: " + dir);

  Gazetteer merged;
  merged.abbrev_ = abbrev;
  for (const auto& f : files) {
    const Gazetteer part = load_csv(f, abbrev);
    for (const auto& [k, s] : part.city_) merged.add("city", k, s);
    for (const auto& [k, s] : part.institution_) merged.add("institution", k, s);
    for (const auto& [k, s] : part.org_unit_) merged.add("org_unit", k, s);
    for (const auto& [k, s] : part.postcode_) merged.add("postcode_prefix", k, s);
    for (const auto& [k, s] : part.patterns_) merged.add("state_pattern", k, s);
  }
  merged.validate();
  return merged;
}

void Gazetteer::validate() const {
  for (const auto& [k, s] : city_)
    if (normalize_text(k, abbrev_) != k)
      throw Error("GAZETTEER_UNNORMALIZED", "city key not normalized: " + k);
  std::set<State> pattern_states;
  for (const auto& [k, s] : patterns_) pattern_states.insert(s);
  // A usable default set names every state at least once across tables.
  std::set<State> covered = pattern_states;
  for (const auto& [k, s] : city_) covered.insert(s);
  for (const auto& [k, s] : institution_) covered.insert(s);
  for (const auto& [k, s] : postcode_) covered.insert(s);
  if (covered.size() != kNumStates)
    throw Error("GAZETTEER_COVERAGE", "gazetteer does not cover all 32 states");
}

Gazetteer::StateVocabulary Gazetteer::vocabulary_for(State s) const {
  StateVocabulary v;
  for (const auto& [k, st] : city_)
    if (st == s) v.cities.push_back(k);
  for (const auto& [k, st] : institution_)
    if (st == s) v.institutions.push_back(k);
  for (const auto& [k, st] : org_unit_)
    if (st == s) v.org_units.push_back(k);
  for (const auto& [k, st] : postcode_)
    if (st == s) v.postcode_prefixes.push_back(k);
  for (const auto& [k, st] : patterns_)
    if (st == s) v.patterns.push_back(k);
  return v;
}

}  // namespace migraflow
