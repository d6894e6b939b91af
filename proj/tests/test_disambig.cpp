#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "migraflow/disambig.hpp"
#include "migraflow/synth.hpp"
#include "migraflow/util.hpp"

using namespace migraflow;

namespace {

Corpus author_with_publications(const std::string& author, int n_pubs) {
  Corpus corpus;
  corpus.window = {1996, 2018};
  for (int i = 0; i < n_pubs; ++i) {
    auto rec = testutil::make_record(author + "_r" + std::to_string(i), author, 2000,
                                     author + "_p" + std::to_string(i));
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

std::vector<const AuthorshipRecord*> pointers(const std::vector<AuthorshipRecord>& records) {
  std::vector<const AuthorshipRecord*> out;
  for (const auto& r : records) out.push_back(&r);
  return out;
}

int count_clusters(const std::vector<int>& assignment) {
  std::set<int> ids(assignment.begin(), assignment.end());
  return static_cast<int>(ids.size());
}

}  // namespace

TEST_CASE("find_suspicious uses a strict publication-count threshold") {
  CHECK(find_suspicious(author_with_publications("A", 276), 276).empty());
  CHECK(find_suspicious(author_with_publications("A", 300), 276) ==
        std::vector<std::string>{"A"});
  Corpus empty;
  CHECK(find_suspicious(empty, 276).empty());
  // repeated publication ids count once
  Corpus repeated = author_with_publications("A", 277);
  for (auto& rec : repeated.records) rec.publication_id = "same";
  CHECK(find_suspicious(repeated, 1).empty());
}

TEST_CASE("pairwise_score: identical full records earn every positive facet maximum") {
  auto a = testutil::make_record("R1", "A", 2000);
  a.author_name = "maria garcia";
  a.coauthor_ids = {"c1", "c2", "c3"};
  a.subjects = {"s1"};
  a.funding_ids = {"g1"};
  a.institution = "universidad de colima";
  canonicalize_sets(a);
  const SimilarityWeights w;
  CHECK(pairwise_score(a, a, w) == doctest::Approx(w.max_score()).epsilon(1e-12));
  CHECK(w.max_score() == doctest::Approx(1.0));
}

TEST_CASE("pairwise_score: all facets missing on both sides scores zero") {
  const auto a = testutil::make_record("R1", "A", 2000);
  const auto b = testutil::make_record("R2", "A", 2001);
  CHECK(pairwise_score(a, b, SimilarityWeights{}) == 0.0);
}

TEST_CASE("pairwise_score: frozen hand-evaluated fixture") {
  // identical names (sim 1), identical 3-element coauthor sets (overlap 1),
  // same single subject (overlap 1), funding and affiliation missing:
  //   0.4*1 + 0.25*1 + 0.15*1 = 0.8
  auto a = testutil::make_record("R1", "A", 2000);
  a.author_name = "jose luis hernandez";
  a.coauthor_ids = {"c1", "c2", "c3"};
  a.subjects = {"phys"};
  auto b = testutil::make_record("R2", "A", 2003);
  b.author_name = "jose luis hernandez";
  b.coauthor_ids = {"c1", "c2", "c3"};
  b.subjects = {"phys"};
  canonicalize_sets(a);
  canonicalize_sets(b);
  CHECK(pairwise_score(a, b, SimilarityWeights{}) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pairwise_score: dissimilar names are penalized below zero") {
  auto a = testutil::make_record("R1", "A", 2000);
  a.author_name = "qqqqqq wwwwww";
  auto b = testutil::make_record("R2", "A", 2001);
  b.author_name = "zzzz xxxx";
  const double score = pairwise_score(a, b, SimilarityWeights{});
  CHECK(score < 0.0);  // no bigram overlap: 0.4*0 - 0.5*1
  CHECK(score == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("distance matrix is symmetric, zero-diagonal and finite") {
  SynthConfig cfg;
  cfg.persons = 6;
  cfg.single_record_rate = 0;
  const auto [corpus, truth] = synthesize(cfg, testutil::default_gazetteer(), 3);
  const auto recs = pointers(corpus.records);
  const auto d = distance_matrix(recs, SimilarityWeights{});
  REQUIRE(d.rows() == static_cast<Eigen::Index>(recs.size()));
  CHECK(d.allFinite());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    CHECK(d(i, i) == 0.0);
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      CHECK(d(i, j) == d(j, i));
      CHECK(d(i, j) >= 0.0);
    }
  }
}

TEST_CASE("cluster: single record is one cluster") {
  const auto corpus = author_with_publications("A", 1);
  const auto assignment = cluster(pointers(corpus.records), SimilarityWeights{}, Linkage::Average, 0.5);
  CHECK(assignment == std::vector<int>{0});
}

TEST_CASE("cluster: identical fully-populated records merge at any positive threshold") {
  auto a = testutil::make_record("R1", "A", 2000, "p1");
  a.author_name = "ana torres";
  a.coauthor_ids = {"c1"};
  a.subjects = {"s1"};
  a.funding_ids = {"g1"};
  a.institution = "universidad de sonora";
  auto b = a;
  b.record_id = "R2";
  std::vector<AuthorshipRecord> records = {a, b};
  for (double threshold : {0.05, 0.3, 1.0}) {
    const auto assignment =
        cluster(pointers(records), SimilarityWeights{}, Linkage::Average, threshold);
    CHECK(count_clusters(assignment) == 1);
  }
}

TEST_CASE("cluster: synthetic merged identity splits into two clusters") {
  // two persons, disjoint coauthors and subjects, dissimilar names
  std::vector<AuthorshipRecord> records;
  for (int i = 0; i < 4; ++i) {
    auto rec = testutil::make_record("P1_r" + std::to_string(i), "SHARED", 2000 + i);
    rec.author_name = "maria fernanda gutierrez";
    rec.coauthor_ids = {"x1", "x2", "x3"};
    rec.subjects = {"bio"};
    rec.institution = "universidad de guadalajara";
    canonicalize_sets(rec);
    records.push_back(std::move(rec));
  }
  for (int i = 0; i < 4; ++i) {
    auto rec = testutil::make_record("P2_r" + std::to_string(i), "SHARED", 2000 + i);
    rec.author_name = "pedro zavala";
    rec.coauthor_ids = {"y1", "y2"};
    rec.subjects = {"math"};
    rec.institution = "universidad autonoma de yucatan";
    canonicalize_sets(rec);
    records.push_back(std::move(rec));
  }
  const auto assignment = cluster(pointers(records), SimilarityWeights{}, Linkage::Average, 0.5);
  CHECK(count_clusters(assignment) == 2);
  for (int i = 1; i < 4; ++i) {
    CHECK(assignment[0] == assignment[static_cast<std::size_t>(i)]);
    CHECK(assignment[4] == assignment[static_cast<std::size_t>(4 + i)]);
  }
  CHECK(assignment[0] != assignment[4]);
}

TEST_CASE("cluster: conservative default never merges without shared evidence") {
  auto a = testutil::make_record("R1", "A", 2000);
  a.author_name = "alpha beta";
  a.coauthor_ids = {"c1"};
  a.subjects = {"s1"};
  auto b = testutil::make_record("R2", "A", 2005);
  b.author_name = "gamma delta";
  b.coauthor_ids = {"c9"};
  b.subjects = {"s9"};
  const DisambigConfig cfg;
  const auto assignment =
      cluster(pointers(std::vector<AuthorshipRecord>{a, b}), cfg.weights, cfg.linkage,
              cfg.distance_threshold);
  CHECK(count_clusters(assignment) == 2);
}

TEST_CASE("cluster: a single strong facet is insufficient at the default cutoff") {
  // identical names but nothing else in common
  auto a = testutil::make_record("R1", "A", 2000);
  a.author_name = "juan perez";
  auto b = testutil::make_record("R2", "A", 2005);
  b.author_name = "juan perez";
  const DisambigConfig cfg;
  const auto assignment = cluster(pointers(std::vector<AuthorshipRecord>{a, b}), cfg.weights,
                                  cfg.linkage, cfg.distance_threshold);
  CHECK(count_clusters(assignment) == 2);
}

TEST_CASE("cluster determinism and threshold monotonicity") {
  SynthConfig scfg;
  scfg.persons = 4;
  scfg.single_record_rate = 0;
  scfg.merged_identity_rate = 1.0;  // everything piles onto few raw ids
  const auto [corpus, truth] = synthesize(scfg, testutil::default_gazetteer(), 55);
  const auto recs = pointers(corpus.records);

  const auto first = cluster(recs, SimilarityWeights{}, Linkage::Average, 0.5);
  const auto second = cluster(recs, SimilarityWeights{}, Linkage::Average, 0.5);
  CHECK(first == second);

  int previous = INT32_MAX;
  for (double threshold : {0.1, 0.2, 0.4, 0.8, 1.2, 2.0}) {
    const auto assignment = cluster(recs, SimilarityWeights{}, Linkage::Average, threshold);
    const int n = count_clusters(assignment);
    CHECK(n <= previous);  // raising the cutoff never splits further
    previous = n;
    // partition property: every record in exactly one cluster
    CHECK(assignment.size() == recs.size());
    for (int label : assignment) CHECK(label >= 0);
  }
}

TEST_CASE("cluster: complete linkage is available and at least as strict") {
  SynthConfig scfg;
  scfg.persons = 6;
  scfg.single_record_rate = 0;
  scfg.merged_identity_rate = 1.0;
  const auto [corpus, truth] = synthesize(scfg, testutil::default_gazetteer(), 9);
  const auto recs = pointers(corpus.records);
  const int avg = count_clusters(cluster(recs, SimilarityWeights{}, Linkage::Average, 0.5));
  const int complete = count_clusters(cluster(recs, SimilarityWeights{}, Linkage::Complete, 0.5));
  CHECK(complete >= avg);
}

TEST_CASE("weights validation") {
  SimilarityWeights w;
  w.name_weight = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(w.validate(), Error);
  SimilarityWeights none;
  none.name_weight = none.coauthor_weight = none.subject_weight = none.funding_weight =
      none.affiliation_weight = 0;
  CHECK_THROWS_AS(none.validate(), Error);
}

TEST_CASE("disambiguate: corpus without suspicious authors is untouched") {
  const auto corpus = author_with_publications("A", 5);
  DisambigConfig cfg;  // threshold 276
  const auto [revised, result] = disambiguate(corpus, cfg);
  CHECK(result.stats.suspicious_ids == 0);
  CHECK(result.stats.clusters == 0);
  CHECK(result.stats.records_touched == 0);
  for (const auto& rec : revised.records) CHECK(rec.revised_author_id == rec.raw_author_id);
}

TEST_CASE("disambiguate separates seeded merged identities") {
  SynthConfig scfg;
  scfg.persons = 120;
  scfg.merged_identity_rate = 0.12;
  scfg.single_record_rate = 0;
  const auto [corpus, truth] = synthesize(scfg, testutil::default_gazetteer(), 2718);
  REQUIRE(truth.merged_identities.size() >= 5);

  DisambigConfig cfg;
  cfg.suspicious_threshold = 12;
  const auto [revised, result] = disambiguate(corpus, cfg);

  std::map<std::string, std::map<std::string, int>> person_revised_counts;
  for (const auto& rec : revised.records) {
    const auto& person = truth.author_of_record.at(rec.record_id);
    ++person_revised_counts[person][rec.revised_author_id];
  }
  auto majority = [&](const std::string& person) {
    std::string best;
    int best_n = -1;
    for (const auto& [id, n] : person_revised_counts.at(person))
      if (n > best_n) {
        best = id;
        best_n = n;
      }
    return best;
  };
  std::size_t separated = 0;
  for (const auto& [raw, persons] : truth.merged_identities)
    if (majority(persons[0]) != majority(persons[1])) ++separated;
  CHECK(static_cast<double>(separated) >=
        0.9 * static_cast<double>(truth.merged_identities.size()));
}
