#include "migraflow/georesolve.hpp"

#include <algorithm>

#include "migraflow/util.hpp"

namespace migraflow {

namespace {

bool word_boundary(const std::string& text, std::size_t pos, std::size_t len) {
  const bool left_ok = pos == 0 || text[pos - 1] == ' ';
  const bool right_ok = pos + len == text.size() || text[pos + len] == ' ';
  return left_ok && right_ok;
}

// Rightmost word-aligned pattern hit; longer patterns shadow shorter ones by
// masking their span, so "baja california sur" is never read as BCN.
std::optional<State> scan_patterns(const std::string& normalized, const Gazetteer& g) {
  std::vector<bool> masked(normalized.size(), false);
  std::optional<State> best;
  std::size_t best_pos = 0;
  for (const auto& [pattern, state] : g.state_patterns()) {
    std::size_t from = 0;
    while (true) {
      const std::size_t pos = normalized.find(pattern, from);
      if (pos == std::string::npos) break;
      from = pos + 1;
      if (!word_boundary(normalized, pos, pattern.size())) continue;
      bool overlaps = false;
      for (std::size_t i = pos; i < pos + pattern.size(); ++i)
        if (masked[i]) {
          overlaps = true;
          break;
        }
      if (overlaps) continue;
      for (std::size_t i = pos; i < pos + pattern.size(); ++i) masked[i] = true;
      if (!best || pos >= best_pos) {
        best = state;
        best_pos = pos;
      }
    }
  }
  return best;
}

std::optional<std::string> find_postal_code(const std::string& normalized) {
  std::size_t run = 0;
  for (std::size_t i = 0; i <= normalized.size(); ++i) {
    const bool digit = i < normalized.size() && std::isdigit(static_cast<unsigned char>(normalized[i]));
    if (digit) {
      ++run;
      continue;
    }
    if (run == 5 && word_boundary(normalized, i - run, run))
      return normalized.substr(i - run, run);
    run = 0;
  }
  return std::nullopt;
}

std::string postcode_prefix_of(const std::string& raw) {
  std::string digits;
  for (char c : raw)
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  if (digits.size() < 2) return {};
  return digits.substr(0, 2);
}

}  // namespace

int CandidateSet::filled() const {
  int n = 0;
  for (const auto& s : slots)
    if (s) ++n;
  return n;
}

CandidateSet candidates(const AuthorshipRecord& rec, const Gazetteer& g) {
  CandidateSet out;
  const auto& abbrev = g.abbreviations();

  if (!rec.org_unit.empty())
    out[CandidateSlot::OrgUnit] = g.org_unit(normalize_text(rec.org_unit, abbrev));
  if (!rec.institution.empty())
    out[CandidateSlot::Institution] = g.institution(normalize_text(rec.institution, abbrev));
  if (!rec.city.empty())
    out[CandidateSlot::City] = g.city(normalize_text(rec.city, abbrev));

  std::string address_norm;
  if (!rec.street_address.empty()) {
    address_norm = normalize_text(rec.street_address, abbrev);
    out[CandidateSlot::StreetAddress] = scan_patterns(address_norm, g);
  }

  if (!rec.postcode.empty()) {
    const std::string prefix = postcode_prefix_of(rec.postcode);
    if (!prefix.empty()) out[CandidateSlot::Postcode] = g.postcode_prefix(prefix);
  } else if (!address_norm.empty()) {
    if (const auto code = find_postal_code(address_norm))
      out[CandidateSlot::Postcode] = g.postcode_prefix(code->substr(0, 2));
  }
  return out;
}

std::optional<State> resolve(const CandidateSet& c) {
  std::array<int, kNumStates> counts{};
  for (const auto& slot : c.slots)
    if (slot) ++counts[static_cast<std::size_t>(*slot)];
  int best_count = 0;
  int n_best = 0;
  State best = State::AGU;
  for (int i = 0; i < kNumStates; ++i) {
    if (counts[static_cast<std::size_t>(i)] > best_count) {
      best_count = counts[static_cast<std::size_t>(i)];
      best = static_cast<State>(i);
      n_best = 1;
    } else if (counts[static_cast<std::size_t>(i)] == best_count && best_count > 0) {
      ++n_best;
    }
  }
  if (best_count >= 2 && n_best == 1) return best;
  return std::nullopt;
}

bool is_mexico_country(const std::string& country) {
  if (country.empty()) return true;  // missing country does not exclude
  const std::string n = normalize_text(country);
  return n == "mx" || n == "mex" || n == "mexico" || n == "mexique";
}

ResolveResult resolve_corpus(const Corpus& corpus, const Gazetteer& g) {
  ResolveResult result;
  result.coverage.total = corpus.records.size();
  std::vector<std::pair<std::string, RecordResolution>> rows(corpus.records.size());
  parallel_for(corpus.records.size(), [&](std::size_t i) {
    const auto& rec = corpus.records[i];
    RecordResolution res;
    if (!is_mexico_country(rec.country)) {
      res.status = ResolutionStatus::ExcludedForeign;
    } else {
      res.candidates = candidates(rec, g);
      res.state = resolve(res.candidates);
      res.status = res.state ? ResolutionStatus::Resolved : ResolutionStatus::Unresolved;
    }
    rows[i] = {rec.record_id, res};
  });
  for (auto& [id, res] : rows) {
    switch (res.status) {
      case ResolutionStatus::Resolved: ++result.coverage.resolved; break;
      case ResolutionStatus::Unresolved: ++result.coverage.unresolved; break;
      case ResolutionStatus::ExcludedForeign: ++result.coverage.excluded_foreign; break;
    }
    result.by_record.emplace(std::move(id), res);
  }
  return result;
}

}  // namespace migraflow
