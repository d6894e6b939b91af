#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "migraflow/gazetteer.hpp"
#include "migraflow/record.hpp"

namespace migraflow {

// Generator settings for synthetic corpora with known ground truth. Real
// bibliometric extracts are proprietary, so every end-to-end test and the
// bundled fixture run on corpora produced here.
struct SynthConfig {
  int persons = 300;
  YearWindow window{1996, 2018};

  // Publications per person: min_pubs + Poisson(mean_pubs - min_pubs).
  int min_pubs = 4;
  double mean_pubs = 10.0;
  int max_gap_years = 3;           // widest gap between consecutive pub years
  double same_year_pub_prob = 0.3; // next publication falls in the same year

  double move_prob_per_year = 0.05;
  double single_record_rate = 0.3;   // persons contributing exactly one record
  double merged_identity_rate = 0.02;  // persons sharing another's raw author id

  // Affiliation noise.
  double field_dropout_rate = 0.2;   // per field
  double typo_rate = 0.03;           // per surviving text field
  double abbrev_variant_rate = 0.3;  // raw spellings ("Univ.", accents)

  double citation_mean = 5.0;

  void validate() const;  // throws SYNTH_BAD_CONFIG
};

struct TrueMove {
  State from;
  State to;
  int year;
};

// Everything the generator knows that the pipeline has to recover.
struct GroundTruth {
  std::map<std::string, std::string> author_of_record;  // record_id -> person id
  std::map<std::string, State> state_of_record;
  std::map<std::string, std::vector<TrueMove>> moves;   // person id -> moves, year-ordered
  // raw_author_id -> person ids, only for ids shared by >1 person
  std::map<std::string, std::vector<std::string>> merged_identities;
};

// Deterministic in (config, seed): same inputs give byte-identical corpora.
std::pair<Corpus, GroundTruth> synthesize(const SynthConfig& config, const Gazetteer& gazetteer,
                                          std::uint64_t seed);

// Midyear population stand-in (state x year), for scholar-density measures.
// Deterministic per (window, seed); values are plausible magnitudes only.
std::map<std::pair<State, int>, double> synthesize_population(const YearWindow& window,
                                                              std::uint64_t seed);

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const std::string& text);

}  // namespace migraflow
