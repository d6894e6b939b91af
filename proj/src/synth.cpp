#include "migraflow/synth.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "migraflow/corpus_io.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

namespace {

const std::vector<std::string> kGivenNames = {
    "maria", "jose", "juan", "ana", "luis", "carmen", "pedro", "laura",
    "miguel", "sofia", "carlos", "elena", "jorge", "lucia", "ricardo",
    "teresa", "fernando", "adriana", "raul", "patricia", "hugo", "silvia",
    "arturo", "gabriela"};

const std::vector<std::string> kSurnames = {
    "garcia", "hernandez", "lopez", "martinez", "gonzalez", "perez",
    "rodriguez", "sanchez", "ramirez", "cruz", "flores", "gomez", "diaz",
    "reyes", "torres", "gutierrez", "ruiz", "mendoza", "aguilar", "ortiz",
    "moreno", "castillo", "romero", "alvarez", "suarez", "rojas", "vargas",
    "molina", "castro", "ortega", "delgado", "pena", "rios", "soto",
    "cabrera", "campos", "vega", "fuentes", "carrillo", "ibarra"};

const std::vector<std::string> kGenericUnits = {
    "facultad de ciencias", "departamento de fisica",
    "instituto de investigaciones biomedicas", "centro de investigacion",
    "departamento de matematicas", "escuela de ingenieria"};

// Pre-normalization spelling variants; all fold back under normalize_text.
const std::vector<std::pair<std::string, std::string>> kRawSpellings = {
    {"universidad", "Univ."}, {"nacional", "Nac."},   {"autonoma", "Autónoma"},
    {"instituto", "Inst."},   {"tecnologico", "Tecnológico"},
    {"mexico", "México"},     {"merida", "Mérida"},   {"queretaro", "Querétaro"},
    {"michoacan", "Michoacán"}, {"leon", "León"},     {"potosi", "Potosí"},
    {"yucatan", "Yucatán"},   {"ciudad", "Cd."},      {"estado", "Edo."},
    {"avenida", "Av."}};

std::string apply_raw_spelling(const std::string& s, Rng& rng, double rate) {
  if (!rng.bernoulli(rate)) return s;
  std::string out;
  for (const auto& tok : tokenize(s)) {
    std::string word = tok;
    for (const auto& [plain, raw] : kRawSpellings) {
      if (word == plain && rng.bernoulli(0.5)) {
        word = raw;
        break;
      }
    }
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::string apply_typo(const std::string& s, Rng& rng) {
  if (s.size() < 4) return s;
  // Only touch pure-ASCII pairs so multi-byte UTF-8 sequences stay intact.
  std::vector<std::size_t> eligible;
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    if (static_cast<unsigned char>(s[i]) < 0x80 && static_cast<unsigned char>(s[i + 1]) < 0x80)
      eligible.push_back(i);
  if (eligible.empty()) return s;
  std::string out = s;
  const std::size_t pos = eligible[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
  if (rng.bernoulli(0.5))
    std::swap(out[pos], out[pos + 1]);
  else
    out.erase(pos, 1);
  return out;
}

std::string pad_number(long long n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

struct Person {
  std::string id;
  std::string raw_author_id;
  std::string name;
  State home;
  std::vector<int> pub_years;            // sorted, may repeat
  std::vector<TrueMove> moves;           // year-ordered
  std::vector<std::string> coauthor_pool;
  std::vector<std::string> subject_pool;
  std::vector<std::string> funding_pool;

  State state_at(int year) const {
    State s = home;
    for (const auto& m : moves)
      if (m.year <= year) s = m.to;
    return s;
  }
};

}  // namespace

void SynthConfig::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (persons < 1) throw Error("SYNTH_BAD_CONFIG", "persons must be >= 1");
  if (window.start > window.end) throw Error("SYNTH_BAD_CONFIG", "window start > end");
  if (min_pubs < 1) throw Error("SYNTH_BAD_CONFIG", "min_pubs must be >= 1");
  if (mean_pubs < min_pubs) throw Error("SYNTH_BAD_CONFIG", "mean_pubs below min_pubs");
  if (max_gap_years < 1) throw Error("SYNTH_BAD_CONFIG", "max_gap_years must be >= 1");
  if (citation_mean < 0) throw Error("SYNTH_BAD_CONFIG", "citation_mean negative");
  for (double p : {same_year_pub_prob, move_prob_per_year, single_record_rate,
                   merged_identity_rate, field_dropout_rate, typo_rate,
                   abbrev_variant_rate})
    if (!in_unit(p)) throw Error("SYNTH_BAD_CONFIG", "probability outside [0,1]");
}

std::pair<Corpus, GroundTruth> synthesize(const SynthConfig& config, const Gazetteer& gazetteer,
                                          std::uint64_t seed) {
  config.validate();
  Rng rng(seed ^ 0x6d69677261666cull);

  std::vector<Gazetteer::StateVocabulary> vocab;
  vocab.reserve(kNumStates);
  for (State s : all_states()) {
    auto v = gazetteer.vocabulary_for(s);
    if (v.cities.empty() || v.institutions.empty() || v.postcode_prefixes.empty() ||
        v.patterns.empty())
      throw Error("SYNTH_SPARSE_GAZETTEER",
                  "state lacks gazetteer vocabulary: " + std::string(state_code(s)));
    vocab.push_back(std::move(v));
  }

  std::vector<Person> persons;
  persons.reserve(static_cast<std::size_t>(config.persons));
  std::vector<std::size_t> mergeable;  // earlier persons available for id sharing
  GroundTruth truth;

  for (int pi = 0; pi < config.persons; ++pi) {
    Person p;
    p.id = "P" + pad_number(pi, 6);
    p.name = rng.pick(kGivenNames) + " " + rng.pick(kSurnames) + " " + rng.pick(kSurnames);
    p.home = static_cast<State>(rng.uniform_int(0, kNumStates - 1));

    const bool single = rng.bernoulli(config.single_record_rate);
    // Only multi-publication persons share ids; a merged identity is two
    // active researchers pooled under one provider id.
    const bool shares_id = !single && pi > 0 && !mergeable.empty() &&
                           rng.bernoulli(config.merged_identity_rate);
    if (shares_id) {
      const auto slot = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(mergeable.size()) - 1));
      const std::size_t partner = mergeable[slot];
      mergeable.erase(mergeable.begin() + static_cast<std::ptrdiff_t>(slot));
      p.raw_author_id = persons[partner].raw_author_id;
      truth.merged_identities[p.raw_author_id] = {persons[partner].id, p.id};
    } else {
      p.raw_author_id = "A" + pad_number(pi, 6);
    }

    const int n_pubs = single ? 1 : config.min_pubs + rng.poisson(config.mean_pubs - config.min_pubs);

    int year = static_cast<int>(rng.uniform_int(config.window.start,
                                                std::max(config.window.start, config.window.end - 4)));
    for (int k = 0; k < n_pubs; ++k) {
      p.pub_years.push_back(year);
      if (k + 1 == n_pubs) break;
      if (!rng.bernoulli(config.same_year_pub_prob))
        year += static_cast<int>(rng.uniform_int(1, config.max_gap_years));
      year = std::min(year, config.window.end);
    }

    // Moves happen at year boundaries strictly inside the publication span,
    // so every true move has publications on both sides.
    const int first = p.pub_years.front();
    const int last = p.pub_years.back();
    State current = p.home;
    for (int y = first + 1; y <= last; ++y) {
      if (rng.bernoulli(config.move_prob_per_year)) {
        State next = current;
        while (next == current)
          next = static_cast<State>(rng.uniform_int(0, kNumStates - 1));
        p.moves.push_back({current, next, y});
        current = next;
      }
    }
    truth.moves[p.id] = p.moves;

    const int pool = static_cast<int>(rng.uniform_int(3, 8));
    for (int c = 0; c < pool; ++c)
      p.coauthor_pool.push_back("C" + pad_number(rng.uniform_int(0, 999999), 6));
    const int subjects = static_cast<int>(rng.uniform_int(1, 3));
    for (int c = 0; c < subjects; ++c)
      p.subject_pool.push_back("SUBJ" + pad_number(rng.uniform_int(0, 29), 2));
    if (rng.bernoulli(0.6))
      p.funding_pool.push_back("G" + pad_number(rng.uniform_int(0, 99999), 5));

    if (!shares_id && !single) mergeable.push_back(persons.size());
    persons.push_back(std::move(p));
  }

  Corpus corpus;
  corpus.window = config.window;
  long long record_counter = 0;
  for (const auto& p : persons) {
    for (std::size_t k = 0; k < p.pub_years.size(); ++k) {
      const int year = p.pub_years[k];
      const State state = p.state_at(year);
      const auto& v = vocab[static_cast<std::size_t>(state)];

      AuthorshipRecord rec;
      rec.record_id = "R" + pad_number(record_counter++, 8);
      rec.raw_author_id = p.raw_author_id;
      rec.revised_author_id = p.raw_author_id;
      rec.author_name = p.name;
      rec.publication_id = "PUB_" + p.id + "_" + pad_number(static_cast<long long>(k), 3);
      rec.year = year;
      rec.country = "MX";

      const std::string& city = rng.pick(v.cities);
      const std::string& institution = rng.pick(v.institutions);
      const std::string pattern = v.patterns[0];  // longest first: full state name
      const std::string prefix = rng.pick(v.postcode_prefixes);
      rec.city = city;
      rec.institution = institution;
      rec.org_unit = rng.bernoulli(0.5) ? institution : rng.pick(kGenericUnits);
      rec.postcode = prefix + pad_number(rng.uniform_int(0, 999), 3);
      rec.street_address = "avenida universidad " +
                           std::to_string(rng.uniform_int(1, 999)) + " " + city + " " + pattern;

      rec.citation_count = rng.poisson(config.citation_mean);
      const int n_co = static_cast<int>(
          rng.uniform_int(2, std::max<std::int64_t>(2, static_cast<std::int64_t>(p.coauthor_pool.size()))));
      for (int c = 0; c < n_co; ++c) rec.coauthor_ids.push_back(p.coauthor_pool[static_cast<std::size_t>(c)]);
      rec.subjects = p.subject_pool;
      if (!p.funding_pool.empty() && rng.bernoulli(0.3)) rec.funding_ids = p.funding_pool;

      // Noise: raw spellings, then dropout, then typos. Draw dropout flags
      // unconditionally to keep the RNG stream layout independent of content.
      rec.institution = apply_raw_spelling(rec.institution, rng, config.abbrev_variant_rate);
      rec.org_unit = apply_raw_spelling(rec.org_unit, rng, config.abbrev_variant_rate);
      rec.street_address = apply_raw_spelling(rec.street_address, rng, config.abbrev_variant_rate);
      rec.city = apply_raw_spelling(rec.city, rng, config.abbrev_variant_rate);

      const bool drop_org = rng.bernoulli(config.field_dropout_rate);
      const bool drop_inst = rng.bernoulli(config.field_dropout_rate);
      const bool drop_addr = rng.bernoulli(config.field_dropout_rate);
      const bool drop_city = rng.bernoulli(config.field_dropout_rate);
      const bool drop_post = rng.bernoulli(config.field_dropout_rate);
      if (drop_org) rec.org_unit.clear();
      if (drop_inst) rec.institution.clear();
      if (drop_addr) rec.street_address.clear();
      if (drop_post) rec.postcode.clear();
      // Keep at least one affiliation field so the record stays resolvable.
      if (drop_city && !(drop_org && drop_inst && drop_addr && drop_post)) rec.city.clear();

      for (std::string* field : {&rec.city, &rec.institution, &rec.street_address})
        if (!field->empty() && rng.bernoulli(config.typo_rate)) *field = apply_typo(*field, rng);

      canonicalize_sets(rec);
      truth.author_of_record[rec.record_id] = p.id;
      truth.state_of_record[rec.record_id] = state;
      corpus.records.push_back(std::move(rec));
    }
  }
  return {std::move(corpus), std::move(truth)};
}

std::map<std::pair<State, int>, double> synthesize_population(const YearWindow& window,
                                                              std::uint64_t seed) {
  Rng rng(seed ^ 0x706f70756c617465ull);
  std::map<std::pair<State, int>, double> pop;
  for (State s : all_states()) {
    const double base = 600000.0 + rng.unit() * 8000000.0;
    const double growth = 1.005 + rng.unit() * 0.012;
    double value = base;
    for (int y = window.start; y <= window.end; ++y) {
      pop[{s, y}] = std::floor(value);
      value *= growth;
    }
  }
  return pop;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
  nlohmann::json j;
  j["author_of_record"] = truth.author_of_record;
  nlohmann::json states = nlohmann::json::object();
  for (const auto& [rec, s] : truth.state_of_record)
    states[rec] = std::string(state_code(s));
  j["state_of_record"] = states;
  nlohmann::json moves = nlohmann::json::object();
  for (const auto& [person, list] : truth.moves) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : list)
      arr.push_back({{"from", std::string(state_code(m.from))},
                     {"to", std::string(state_code(m.to))},
                     {"year", m.year}});
    moves[person] = arr;
  }
  j["moves"] = moves;
  j["merged_identities"] = truth.merged_identities;
  return j.dump(2) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GroundTruth truth;
  truth.author_of_record =
      j.at("author_of_record").get<std::map<std::string, std::string>>();
  for (const auto& [rec, code] : j.at("state_of_record").items()) {
    const auto s = state_from_code(code.get<std::string>());
    if (!s) throw Error("TRUTH_BAD_STATE", "unknown state in ground truth");
    truth.state_of_record[rec] = *s;
  }
  for (const auto& [person, arr] : j.at("moves").items()) {
    std::vector<TrueMove> list;
    for (const auto& m : arr) {
      const auto from = state_from_code(m.at("from").get<std::string>());
      const auto to = state_from_code(m.at("to").get<std::string>());
      if (!from || !to) throw Error("TRUTH_BAD_STATE", "unknown state in ground truth");
      list.push_back({*from, *to, m.at("year").get<int>()});
    }
    truth.moves[person] = std::move(list);
  }
  truth.merged_identities =
      j.at("merged_identities").get<std::map<std::string, std::vector<std::string>>>();
  return truth;
}

}  // namespace migraflow
