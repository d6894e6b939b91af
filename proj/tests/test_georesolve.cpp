#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "migraflow/georesolve.hpp"
#include "migraflow/synth.hpp"
#include "migraflow/text.hpp"
#include "migraflow/util.hpp"

using namespace migraflow;

namespace {

CandidateSet make_candidates(const std::vector<std::optional<State>>& slots) {
  CandidateSet c;
  for (std::size_t i = 0; i < slots.size(); ++i) c.slots[i] = slots[i];
  return c;
}

// Brute-force mode rule used as the oracle for resolve().
std::optional<State> resolve_oracle(const CandidateSet& c) {
  std::map<State, int> counts;
  for (const auto& s : c.slots)
    if (s) ++counts[*s];
  std::optional<State> best;
  int best_n = 0;
  bool tie = false;
  for (const auto& [s, n] : counts) {
    if (n > best_n) {
      best = s;
      best_n = n;
      tie = false;
    } else if (n == best_n) {
      tie = true;
    }
  }
  if (best_n >= 2 && !tie) return best;
  return std::nullopt;
}

}  // namespace

TEST_CASE("normalize_text folds diacritics") {
  CHECK(normalize_text("Querétaro") == "queretaro");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("Yucatán, MÉXICO") == "yucatan mexico");
  CHECK(normalize_text("Nuevo León") == "nuevo leon");
}

TEST_CASE("normalize_text expands the default abbreviation table") {
  CHECK(normalize_text("Univ. Nac. Autónoma de México") ==
        "universidad nacional autonoma de mexico");
  CHECK(normalize_text("Cd. Juárez") == "ciudad juarez");
  CHECK(normalize_text("Edo. de México") == "estado de mexico");
}

TEST_CASE("normalize_text collapses punctuation and whitespace") {
  CHECK(normalize_text("a,,b   c--d") == "a b c d");
  CHECK(normalize_text("  (C.P. 04510) ") == "c p 04510");
}

TEST_CASE("normalize_text is idempotent") {
  const std::vector<std::string> samples = {
      "Querétaro", "Univ. Nac. Autónoma de México", "C.P. 04510, Coyoacán, CDMX",
      "ÁÉÍÓÚ Ñ ü", "", "123 -- abc", "Av. Insurgentes Sur 3000",
  };
  for (const auto& s : samples) {
    const std::string once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const auto len = rng.uniform_int(0, 40);
    for (int i = 0; i < len; ++i) s.push_back(static_cast<char>(rng.uniform_int(1, 255)));
    const std::string once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("candidates: city-only record fills only the city slot") {
  auto rec = testutil::make_record("R1", "A1", 2000);
  rec.city = "merida";
  const auto c = candidates(rec, testutil::default_gazetteer());
  CHECK(c[CandidateSlot::City] == State::YUC);
  CHECK(!c[CandidateSlot::OrgUnit]);
  CHECK(!c[CandidateSlot::Institution]);
  CHECK(!c[CandidateSlot::StreetAddress]);
  CHECK(!c[CandidateSlot::Postcode]);
  CHECK(c.filled() == 1);
}

TEST_CASE("candidates: empty record yields an empty candidate set") {
  const auto rec = testutil::make_record("R1", "A1", 2000);
  const auto c = candidates(rec, testutil::default_gazetteer());
  CHECK(c.filled() == 0);
}

TEST_CASE("candidates: address postal code and abbreviation both resolve") {
  auto rec = testutil::make_record("R1", "A1", 2000);
  rec.street_address = "C.P. 04510, Coyoacán, CDMX";
  const auto c = candidates(rec, testutil::default_gazetteer());
  CHECK(c[CandidateSlot::Postcode] == State::CMX);
  CHECK(c[CandidateSlot::StreetAddress] == State::CMX);
}

TEST_CASE("candidates: postcode field wins over address scanning") {
  auto rec = testutil::make_record("R1", "A1", 2000);
  rec.postcode = "97000";
  rec.street_address = "C.P. 04510, Coyoacán";
  const auto c = candidates(rec, testutil::default_gazetteer());
  CHECK(c[CandidateSlot::Postcode] == State::YUC);
}

TEST_CASE("candidates: longest pattern shadows its prefix") {
  auto rec = testutil::make_record("R1", "A1", 2000);
  rec.street_address = "km 5 carretera a La Paz, Baja California Sur";
  const auto c = candidates(rec, testutil::default_gazetteer());
  CHECK(c[CandidateSlot::StreetAddress] == State::BCS);
}

TEST_CASE("candidates: rightmost state mention wins") {
  auto rec = testutil::make_record("R1", "A1", 2000);
  rec.street_address = "Av. Oaxaca 12, Guadalajara, Jalisco";
  const auto c = candidates(rec, testutil::default_gazetteer());
  CHECK(c[CandidateSlot::StreetAddress] == State::JAL);
}

TEST_CASE("resolve: mode rule decision vectors") {
  // mode seen twice wins
  CHECK(resolve(make_candidates({State::CMX, State::CMX, State::JAL, std::nullopt,
                                 std::nullopt})) == State::CMX);
  // empty set unresolved
  CHECK(!resolve(make_candidates({})));
  // no candidate reaches two
  CHECK(!resolve(make_candidates({State::JAL, State::CMX, State::NLE, std::nullopt,
                                  std::nullopt})));
  // tied modes are unresolved
  CHECK(!resolve(make_candidates({State::CMX, State::CMX, State::JAL, State::JAL,
                                  std::nullopt})));
}

TEST_CASE("resolve equals the brute-force mode oracle and is order-free") {
  Rng rng(321);
  for (int trial = 0; trial < 500; ++trial) {
    CandidateSet c;
    for (auto& slot : c.slots)
      if (rng.bernoulli(0.6))
        slot = static_cast<State>(rng.uniform_int(0, 3));  // few states, many ties
    const auto got = resolve(c);
    CHECK(got == resolve_oracle(c));
    if (got) {
      bool present = false;
      for (const auto& slot : c.slots)
        if (slot == *got) present = true;
      CHECK(present);  // never invents a state that is not a candidate
    }
  }
}

TEST_CASE("resolve is invariant under slot permutation") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    CandidateSet c;
    for (auto& slot : c.slots)
      if (rng.bernoulli(0.6)) slot = static_cast<State>(rng.uniform_int(0, 4));
    const auto base = resolve(c);
    std::vector<std::optional<State>> slots(c.slots.begin(), c.slots.end());
    rng.shuffle(slots);
    CandidateSet permuted;
    for (std::size_t i = 0; i < slots.size(); ++i) permuted.slots[i] = slots[i];
    CHECK(resolve(permuted) == base);
  }
}

TEST_CASE("resolve_corpus: noise-free synthetic corpus resolves fully") {
  SynthConfig cfg;
  cfg.persons = 60;
  cfg.field_dropout_rate = 0;
  cfg.typo_rate = 0;
  cfg.abbrev_variant_rate = 0;
  const auto [corpus, truth] = synthesize(cfg, testutil::default_gazetteer(), 17);
  const auto result = resolve_corpus(corpus, testutil::default_gazetteer());
  CHECK(result.coverage.resolved == corpus.records.size());
  CHECK(result.coverage.resolved_fraction() == doctest::Approx(1.0));
  for (const auto& [rec_id, res] : result.by_record) {
    REQUIRE(res.state.has_value());
    CHECK(*res.state == truth.state_of_record.at(rec_id));
  }
}

TEST_CASE("resolve_corpus: all-empty affiliations resolve nothing") {
  Corpus corpus;
  corpus.window = {1996, 2018};
  for (int i = 0; i < 5; ++i)
    corpus.records.push_back(testutil::make_record("R" + std::to_string(i), "A1", 2000));
  const auto result = resolve_corpus(corpus, testutil::default_gazetteer());
  CHECK(result.coverage.resolved == 0);
  CHECK(result.coverage.resolved_fraction() == doctest::Approx(0.0));
}

TEST_CASE("resolve_corpus: non-Mexico records are excluded by the country prefilter") {
  Corpus corpus;
  corpus.window = {1996, 2018};
  auto mx = testutil::make_record("R1", "A1", 2000);
  mx.city = "merida";
  mx.postcode = "97000";
  mx.country = "Mexico";
  auto us = testutil::make_record("R2", "A1", 2000);
  us.city = "merida";
  us.postcode = "97000";
  us.country = "US";
  corpus.records = {mx, us};
  const auto result = resolve_corpus(corpus, testutil::default_gazetteer());
  CHECK(result.coverage.excluded_foreign == 1);
  CHECK(result.by_record.at("R2").status == ResolutionStatus::ExcludedForeign);
  CHECK(result.by_record.at("R1").status == ResolutionStatus::Resolved);
}

TEST_CASE("coverage is monotone nonincreasing in the dropout rate") {
  double previous = 2.0;
  for (const double dropout : {0.0, 0.3, 0.6}) {
    SynthConfig cfg;
    cfg.persons = 80;
    cfg.field_dropout_rate = dropout;
    cfg.typo_rate = 0;
    const auto [corpus, truth] = synthesize(cfg, testutil::default_gazetteer(), 1313);
    const auto result = resolve_corpus(corpus, testutil::default_gazetteer());
    CHECK(result.coverage.resolved_fraction() <= previous);
    previous = result.coverage.resolved_fraction();
  }
}
