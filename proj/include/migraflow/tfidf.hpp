#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "migraflow/record.hpp"
#include "migraflow/text.hpp"

namespace migraflow {

// Bag-of-words vocabulary with smoothed IDF weights:
//   idf(t) = ln((1 + N) / (1 + df(t))) + 1
// Terms are the top max_terms by the highest per-document tf*idf they reach
// anywhere in the training corpus (tf = count/len); ties fall back to
// lexicographic order so builds are reproducible.
struct Vocabulary {
  std::vector<std::string> terms;
  Eigen::VectorXd idf;
  std::map<std::string, int> index;

  int size() const { return static_cast<int>(terms.size()); }
};

inline constexpr int kDefaultVocabSize = 3000;

Vocabulary build_vocab(const std::vector<std::string>& documents,
                       int max_terms = kDefaultVocabSize);

// City, institution and street address merged into one normalized string;
// this is the classifier's entire view of a record.
std::string feature_text(const AuthorshipRecord& rec,
                         const AbbreviationTable& abbrev = AbbreviationTable::builtin_default());

// tf*idf entries, L2-normalized. All-zero exactly when no vocabulary term
// occurs in the document.
Eigen::VectorXd featurize(const std::string& document, const Vocabulary& vocab);

}  // namespace migraflow
