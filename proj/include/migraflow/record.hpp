#pragma once

#include <optional>
#include <string>
#include <vector>

#include "migraflow/state.hpp"

namespace migraflow {

// One author-publication linkage, the atomic input unit. Set-valued fields
// are kept sorted and deduplicated so corpora compare and hash stably.
struct AuthorshipRecord {
  std::string record_id;
  std::string raw_author_id;
  std::string revised_author_id;  // raw_author_id until disambiguation runs
  std::string author_name;
  std::string publication_id;
  int year = 0;
  std::string org_unit;
  std::string institution;
  std::string street_address;
  std::string city;
  std::string postcode;
  std::string country;
  std::vector<std::string> subjects;
  std::vector<std::string> coauthor_ids;
  std::vector<std::string> funding_ids;
  long long citation_count = 0;

  bool has_affiliation_field() const {
    return !org_unit.empty() || !institution.empty() || !street_address.empty() ||
           !city.empty() || !postcode.empty();
  }
};

struct YearWindow {
  int start = 1996;
  int end = 2018;

  bool contains(int year) const { return year >= start && year <= end; }
  // Presence padding clips two years at each edge, so stock-based measures
  // only run on this inner range.
  YearWindow effective() const { return {start + 2, end - 2}; }
};

struct Corpus {
  YearWindow window;
  std::vector<AuthorshipRecord> records;

  std::size_t size() const { return records.size(); }
};

void canonicalize_sets(AuthorshipRecord& rec);

}  // namespace migraflow
