#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "migraflow/record.hpp"

namespace migraflow {

// Facet weights for pairwise record comparison. A facet contributes
// weight * similarity + penalty * (1 - similarity) when both records carry
// the facet, 0 when either side is missing it. Similarities live in [0,1],
// so with the defaults the best attainable score is the positive mass 1.0.
struct SimilarityWeights {
  double name_weight = 0.4;
  double coauthor_weight = 0.25;
  double subject_weight = 0.15;
  double funding_weight = 0.1;
  double affiliation_weight = 0.1;

  double name_penalty = -0.5;  // dissimilar names push the score negative
  double coauthor_penalty = 0.0;
  double subject_penalty = 0.0;
  double funding_penalty = 0.0;
  double affiliation_penalty = 0.0;

  double max_score() const;  // sum of positive weights
  void validate() const;     // finite, at least one positive weight
};

enum class Linkage { Average, Complete };

struct DisambigConfig {
  int suspicious_threshold = 276;  // strictly more publications than this
  SimilarityWeights weights;
  Linkage linkage = Linkage::Average;
  // Chosen so one fully-agreeing facet (at most +0.4) cannot merge on its own.
  double distance_threshold = 0.5;
};

double pairwise_score(const AuthorshipRecord& a, const AuthorshipRecord& b,
                      const SimilarityWeights& w);

// Symmetric, zero-diagonal matrix of max_score - pairwise_score over the
// records of one suspicious author id. Pairs are scored in parallel.
Eigen::MatrixXd distance_matrix(const std::vector<const AuthorshipRecord*>& records,
                                const SimilarityWeights& w);

// Agglomerative clustering with the given linkage; merging stops when the
// smallest inter-cluster distance exceeds distance_threshold. Ties pick the
// pair with the smallest record ids, so the output is deterministic.
// Returns one cluster index per input record (0-based, in first-seen order
// of the smallest record id of each cluster).
std::vector<int> cluster(const std::vector<const AuthorshipRecord*>& records,
                         const SimilarityWeights& w, Linkage linkage,
                         double distance_threshold);

struct DisambigStats {
  std::size_t suspicious_ids = 0;
  std::size_t clusters = 0;         // revised ids created for suspicious ids
  std::size_t records_touched = 0;  // records under suspicious ids
  std::size_t records_reassigned = 0;  // records whose revised id != raw id
};

struct DisambigResult {
  std::map<std::string, std::string> revised_id_of_record;  // every record
  DisambigStats stats;
};

// Raw author ids with strictly more than `threshold` distinct publications.
std::vector<std::string> find_suspicious(const Corpus& corpus, int threshold = 276);

// Clusters each suspicious id's records and assigns "<raw>#<k>" revised ids;
// everyone else keeps their raw id. Also writes revised_author_id into the
// returned corpus copy.
std::pair<Corpus, DisambigResult> disambiguate(const Corpus& corpus, const DisambigConfig& cfg);

}  // namespace migraflow
