#include "migraflow/disambig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "migraflow/text.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

namespace {

// Overlap coefficient |A∩B| / min(|A|,|B|) over sorted unique vectors.
double overlap_coefficient(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t shared = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) {
      ++shared;
      ++ia;
      ++ib;
    } else if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(std::min(a.size(), b.size()));
}

std::string merged_affiliation(const AuthorshipRecord& r) {
  std::string s;
  for (const std::string* f : {&r.org_unit, &r.institution, &r.street_address, &r.city, &r.postcode}) {
    if (f->empty()) continue;
    if (!s.empty()) s.push_back(' ');
    s += *f;
  }
  return s;
}

double token_overlap(const std::string& a_norm, const std::string& b_norm) {
  auto ta = tokenize(a_norm);
  auto tb = tokenize(b_norm);
  std::sort(ta.begin(), ta.end());
  ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
  std::sort(tb.begin(), tb.end());
  tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
  return overlap_coefficient(ta, tb);
}

struct Cluster {
  std::vector<int> members;    // indices into the record list
  std::string rep;             // smallest record_id, for tie-breaking
};

}  // namespace

double SimilarityWeights::max_score() const {
  double m = 0;
  for (double w : {name_weight, coauthor_weight, subject_weight, funding_weight,
                   affiliation_weight})
    m += std::max(0.0, w);
  return m;
}

void SimilarityWeights::validate() const {
  bool any_positive = false;
  for (double w : {name_weight, coauthor_weight, subject_weight, funding_weight,
                   affiliation_weight, name_penalty, coauthor_penalty, subject_penalty,
                   funding_penalty, affiliation_penalty}) {
    if (!std::isfinite(w)) throw Error("DISAMBIG_BAD_WEIGHTS", "non-finite similarity weight");
  }
  for (double w : {name_weight, coauthor_weight, subject_weight, funding_weight,
                   affiliation_weight})
    if (w > 0) any_positive = true;
  if (!any_positive)
    throw Error("DISAMBIG_BAD_WEIGHTS", "at least one facet weight must be positive");
}

double pairwise_score(const AuthorshipRecord& a, const AuthorshipRecord& b,
                      const SimilarityWeights& w) {
  double score = 0.0;
  auto facet = [&](double present, double similarity, double weight, double penalty) {
    if (!present) return;
    score += weight * similarity + penalty * (1.0 - similarity);
  };

  facet(!a.author_name.empty() && !b.author_name.empty(),
        bigram_similarity(normalize_text(a.author_name), normalize_text(b.author_name)),
        w.name_weight, w.name_penalty);
  facet(!a.coauthor_ids.empty() && !b.coauthor_ids.empty(),
        overlap_coefficient(a.coauthor_ids, b.coauthor_ids), w.coauthor_weight,
        w.coauthor_penalty);
  facet(!a.subjects.empty() && !b.subjects.empty(),
        overlap_coefficient(a.subjects, b.subjects), w.subject_weight, w.subject_penalty);
  facet(!a.funding_ids.empty() && !b.funding_ids.empty(),
        overlap_coefficient(a.funding_ids, b.funding_ids), w.funding_weight,
        w.funding_penalty);
  const std::string affil_a = merged_affiliation(a);
  const std::string affil_b = merged_affiliation(b);
  facet(!affil_a.empty() && !affil_b.empty(),
        token_overlap(normalize_text(affil_a), normalize_text(affil_b)),
        w.affiliation_weight, w.affiliation_penalty);
  return score;
}

Eigen::MatrixXd distance_matrix(const std::vector<const AuthorshipRecord*>& records,
                                const SimilarityWeights& w) {
  w.validate();
  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const double max_score = w.max_score();

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const double dist =
        max_score - pairwise_score(*records[static_cast<std::size_t>(i)],
                                   *records[static_cast<std::size_t>(j)], w);
    d(i, j) = dist;
    d(j, i) = dist;
  });

  if (!d.allFinite()) throw Error("DISAMBIG_NONFINITE", "non-finite pairwise distance");
  return d;
}

std::vector<int> cluster(const std::vector<const AuthorshipRecord*>& records,
                         const SimilarityWeights& w, Linkage linkage,
                         double distance_threshold) {
  if (records.empty()) throw Error("DISAMBIG_EMPTY", "cluster needs at least one record");
  if (!(distance_threshold > 0))
    throw Error("DISAMBIG_BAD_THRESHOLD", "distance threshold must be positive");

  const std::size_t n = records.size();
  Eigen::MatrixXd dist = distance_matrix(records, w);

  std::vector<Cluster> clusters(n);
  for (std::size_t i = 0; i < n; ++i) {
    clusters[i].members = {static_cast<int>(i)};
    clusters[i].rep = records[i]->record_id;
  }
  std::vector<bool> alive(n, true);
  // Inter-cluster linkage distances, updated via Lance-Williams.
  Eigen::MatrixXd link = dist;

  std::size_t n_alive = n;
  while (n_alive > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        const double d = link(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        // Ties resolved by the lexicographically smallest (rep_i, rep_j) pair.
        bool better = d < best;
        if (!better && d == best && found) {
          const auto& [ci, cj] = std::minmax(clusters[i].rep, clusters[j].rep);
          const auto& [bi_rep, bj_rep] = std::minmax(clusters[bi].rep, clusters[bj].rep);
          better = std::tie(ci, cj) < std::tie(bi_rep, bj_rep);
        }
        if (better) {
          best = d;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found || best > distance_threshold) break;

    // Merge bj into bi.
    const double size_i = static_cast<double>(clusters[bi].members.size());
    const double size_j = static_cast<double>(clusters[bj].members.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      const double dik = link(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(k));
      const double djk = link(static_cast<Eigen::Index>(bj), static_cast<Eigen::Index>(k));
      const double merged = linkage == Linkage::Average
                                ? (size_i * dik + size_j * djk) / (size_i + size_j)
                                : std::max(dik, djk);
      link(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(k)) = merged;
      link(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(bi)) = merged;
    }
    auto& keep = clusters[bi];
    auto& drop = clusters[bj];
    keep.members.insert(keep.members.end(), drop.members.begin(), drop.members.end());
    keep.rep = std::min(keep.rep, drop.rep);
    alive[bj] = false;
    --n_alive;
  }

  // Label clusters by ascending representative record id.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (alive[i]) order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return clusters[a].rep < clusters[b].rep; });

  std::vector<int> assignment(n, -1);
  int label = 0;
  for (std::size_t ci : order) {
    for (int m : clusters[ci].members) assignment[static_cast<std::size_t>(m)] = label;
    ++label;
  }
  return assignment;
}

std::vector<std::string> find_suspicious(const Corpus& corpus, int threshold) {
  if (threshold < 1) throw Error("DISAMBIG_BAD_THRESHOLD", "suspicious threshold must be >= 1");
  std::map<std::string, std::set<std::string>> pubs_by_author;
  for (const auto& rec : corpus.records)
    pubs_by_author[rec.raw_author_id].insert(rec.publication_id);
  std::vector<std::string> out;
  for (const auto& [author, pubs] : pubs_by_author)
    if (pubs.size() > static_cast<std::size_t>(threshold)) out.push_back(author);
  return out;
}

std::pair<Corpus, DisambigResult> disambiguate(const Corpus& corpus, const DisambigConfig& cfg) {
  cfg.weights.validate();
  DisambigResult result;
  const auto suspicious = find_suspicious(corpus, cfg.suspicious_threshold);
  const std::set<std::string> suspicious_set(suspicious.begin(), suspicious.end());
  result.stats.suspicious_ids = suspicious.size();

  for (const auto& rec : corpus.records)
    result.revised_id_of_record[rec.record_id] = rec.raw_author_id;

  // Records per suspicious id, ordered by record_id for determinism.
  std::map<std::string, std::vector<const AuthorshipRecord*>> groups;
  for (const auto& rec : corpus.records)
    if (suspicious_set.count(rec.raw_author_id)) groups[rec.raw_author_id].push_back(&rec);

  for (auto& [author, recs] : groups) {
    std::sort(recs.begin(), recs.end(), [](const AuthorshipRecord* a, const AuthorshipRecord* b) {
      return a->record_id < b->record_id;
    });
    const auto assignment = cluster(recs, cfg.weights, cfg.linkage, cfg.distance_threshold);
    const int n_clusters = assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
    result.stats.clusters += static_cast<std::size_t>(n_clusters);
    result.stats.records_touched += recs.size();
    if (n_clusters <= 1) continue;  // id confirmed as one person, keep it
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const std::string revised = author + "#" + std::to_string(assignment[i]);
      result.revised_id_of_record[recs[i]->record_id] = revised;
      ++result.stats.records_reassigned;
    }
  }

  Corpus out = corpus;
  for (auto& rec : out.records) rec.revised_author_id = result.revised_id_of_record.at(rec.record_id);
  return {std::move(out), std::move(result)};
}

}  // namespace migraflow
