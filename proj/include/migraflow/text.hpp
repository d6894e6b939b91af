#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace migraflow {

// Token-level abbreviation expansions applied by normalize_text, e.g.
// "univ" -> "universidad". Expansions must be fixed points of normalization
// so the whole transform stays idempotent; load/insert enforce that.
class AbbreviationTable {
 public:
  AbbreviationTable() = default;
  static AbbreviationTable load_csv(const std::string& path);
  static const AbbreviationTable& builtin_default();

  void insert(std::string_view abbrev, std::string_view expansion);
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

// Lowercases, folds Latin diacritics to ASCII, collapses punctuation and
// runs of whitespace to single spaces, then expands abbreviations token by
// token. Idempotent: normalize_text(normalize_text(s)) == normalize_text(s).
std::string normalize_text(std::string_view s, const AbbreviationTable& abbrev);
std::string normalize_text(std::string_view s);  // builtin abbreviation table

std::vector<std::string> tokenize(std::string_view normalized);

// Character bigram Dice similarity in [0,1] over normalized strings; 1 for
// identical non-empty inputs, 0 when there is no bigram overlap.
double bigram_similarity(std::string_view a, std::string_view b);

}  // namespace migraflow
