#include "migraflow/tfidf.hpp"

#include <algorithm>
#include <cmath>

#include "migraflow/util.hpp"

namespace migraflow {

std::string feature_text(const AuthorshipRecord& rec, const AbbreviationTable& abbrev) {
  std::string merged;
  for (const std::string* f : {&rec.city, &rec.institution, &rec.street_address}) {
    if (f->empty()) continue;
    if (!merged.empty()) merged.push_back(' ');
    merged += *f;
  }
  return normalize_text(merged, abbrev);
}

Vocabulary build_vocab(const std::vector<std::string>& documents, int max_terms) {
  if (documents.empty())
    throw Error("VOCAB_EMPTY", "build_vocab needs at least one document");
  if (max_terms < 1) throw Error("VOCAB_BAD_SIZE", "max_terms must be >= 1");

  const double n_docs = static_cast<double>(documents.size());
  std::map<std::string, double> max_tf;  // highest per-document tf of each term
  std::map<std::string, long long> df;
  for (const auto& doc : documents) {
    const auto tokens = tokenize(doc);
    if (tokens.empty()) continue;
    std::map<std::string, long long> counts;
    for (const auto& t : tokens) ++counts[t];
    const double len = static_cast<double>(tokens.size());
    for (const auto& [term, count] : counts) {
      const double tf = static_cast<double>(count) / len;
      auto [it, inserted] = max_tf.emplace(term, tf);
      if (!inserted) it->second = std::max(it->second, tf);
      ++df[term];
    }
  }

  std::vector<std::pair<double, std::string>> ranked;  // (-selection stat, term)
  ranked.reserve(max_tf.size());
  for (const auto& [term, tf] : max_tf) {
    const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[term]))) + 1.0;
    ranked.emplace_back(-tf * idf, term);
  }
  std::sort(ranked.begin(), ranked.end());
  if (static_cast<int>(ranked.size()) > max_terms) ranked.resize(static_cast<std::size_t>(max_terms));

  Vocabulary vocab;
  vocab.terms.reserve(ranked.size());
  for (const auto& [neg_stat, term] : ranked) vocab.terms.push_back(term);
  std::sort(vocab.terms.begin(), vocab.terms.end());
  vocab.idf.resize(static_cast<Eigen::Index>(vocab.terms.size()));
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    vocab.index[vocab.terms[i]] = static_cast<int>(i);
    vocab.idf[static_cast<Eigen::Index>(i)] =
        std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[vocab.terms[i]]))) + 1.0;
  }
  return vocab;
}

Eigen::VectorXd featurize(const std::string& document, const Vocabulary& vocab) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  const auto tokens = tokenize(document);
  if (tokens.empty()) return x;
  const double len = static_cast<double>(tokens.size());
  for (const auto& t : tokens) {
    const auto it = vocab.index.find(t);
    if (it == vocab.index.end()) continue;
    x[it->second] += 1.0;
  }
  x /= len;
  x = x.cwiseProduct(vocab.idf);
  const double norm = x.norm();
  if (norm > 0) x /= norm;
  return x;
}

}  // namespace migraflow
