#include "migraflow/measures.hpp"

#include <algorithm>
#include <cmath>

#include "migraflow/csv.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<int> all_areas(const FlowTally& t) {
  std::vector<int> areas(static_cast<std::size_t>(t.n_areas()));
  for (int i = 0; i < t.n_areas(); ++i) areas[static_cast<std::size_t>(i)] = i;
  return areas;
}

}  // namespace

FlowTally::FlowTally(Scope scope, const YearWindow& effective_window, const RegionMap& regions)
    : scope_(scope), window_(effective_window), regions_(regions) {
  if (window_.start > window_.end)
    throw Error("TALLY_BAD_WINDOW", "effective window is empty");
  if (scope_ == Scope::StateLevel) {
    for (State s : all_states()) area_names_.emplace_back(state_code(s));
  } else {
    for (Region r : all_regions()) area_names_.emplace_back(region_code(r));
  }
  const int n_years = window_.end - window_.start + 1;
  const auto n = static_cast<Eigen::Index>(area_names_.size());
  entries_ = Eigen::MatrixXd::Zero(n, n_years);
  exits_ = Eigen::MatrixXd::Zero(n, n_years);
  stock_ = Eigen::MatrixXd::Zero(n, n_years);
  events_ = Eigen::VectorXd::Zero(n_years);
}

int FlowTally::year_index(int year) const {
  if (!window_.contains(year)) return -1;
  return year - window_.start;
}

int FlowTally::year_index_checked(int year) const {
  const int idx = year_index(year);
  if (idx < 0) throw Error("TALLY_BAD_YEAR", "year outside tally window: " + std::to_string(year));
  return idx;
}

int FlowTally::area_of(State s) const {
  if (scope_ == Scope::StateLevel) return static_cast<int>(s);
  return static_cast<int>(regions_.region_of(s));
}

void FlowTally::add_move(State from, State to, int year) {
  if (from == to) throw Error("TALLY_SELF_MOVE", "move with identical origin and destination");
  const int t = year_index(year);
  if (t < 0) return;  // outside the effective window
  const int a_from = area_of(from);
  const int a_to = area_of(to);
  if (a_from == a_to) return;  // intra-area move is not a migration event here
  exits_(a_from, t) += 1;
  entries_(a_to, t) += 1;
  events_(t) += 1;
}

void FlowTally::set_stock(State s, int year, double n) {
  const int t = year_index(year);
  if (t < 0) return;
  stock_(area_of(s), t) += n;
}

FlowTally tally(const std::vector<MoveEvent>& moves, const PresenceTable& presence, Scope scope,
                const RegionMap& regions) {
  FlowTally t(scope, presence.effective_window(), regions);
  for (const auto& m : moves) t.add_move(m.from, m.to, m.year);
  for (const auto& [s, year, n] : presence.cells()) t.set_stock(s, year, static_cast<double>(n));
  return t;
}

std::optional<double> nmr(const FlowTally& t, int area, int year) {
  const double n = t.stock(area, year);
  if (n <= 0) return std::nullopt;
  return (t.entries(area, year) - t.exits(area, year)) / n * 1000.0;
}

std::optional<double> cmi(const FlowTally& t, int year, const std::vector<int>& areas) {
  double stock_sum = 0;
  double turnover = 0;
  for (int a : areas) {
    stock_sum += t.stock(a, year);
    turnover += t.entries(a, year) + t.exits(a, year);
  }
  if (stock_sum <= 0) return std::nullopt;
  return 100.0 * (0.5 * turnover) / stock_sum;
}

std::optional<double> mei(const FlowTally& t, int year, const std::vector<int>& areas) {
  double turnover = 0;
  double net = 0;
  for (int a : areas) {
    turnover += t.entries(a, year) + t.exits(a, year);
    net += std::abs(t.entries(a, year) - t.exits(a, year));
  }
  if (turnover <= 0) return std::nullopt;
  return 100.0 * net / turnover;
}

std::optional<double> anmr(const FlowTally& t, int year, const std::vector<int>& areas) {
  double stock_sum = 0;
  double net = 0;
  for (int a : areas) {
    stock_sum += t.stock(a, year);
    net += std::abs(t.entries(a, year) - t.exits(a, year));
  }
  if (stock_sum <= 0) return std::nullopt;
  return 100.0 * (0.5 * net) / stock_sum;
}

std::optional<double> cmi(const FlowTally& t, int year) { return cmi(t, year, all_areas(t)); }
std::optional<double> mei(const FlowTally& t, int year) { return mei(t, year, all_areas(t)); }
std::optional<double> anmr(const FlowTally& t, int year) { return anmr(t, year, all_areas(t)); }

std::vector<MeasureSeries> measure_series(const FlowTally& state_tally,
                                          const FlowTally& region_tally,
                                          const PresenceTable& presence,
                                          const PopulationTable& population,
                                          const RegionMap& regions) {
  const YearWindow eff = presence.effective_window();
  std::vector<MeasureSeries> out;
  auto series = [&](const std::string& index, const std::string& area, const std::string& units) {
    out.push_back({index, area, units, {}});
    return &out.back();
  };

  for (State s : all_states()) {
    auto* nmr_series = series("NMR", std::string(state_code(s)), "per 1,000");
    for (int y = eff.start; y <= eff.end; ++y)
      nmr_series->values[y] = nmr(state_tally, static_cast<int>(s), y);
  }
  for (Region r : all_regions()) {
    auto* nmr_series = series("NMR", std::string(region_code(r)), "per 1,000");
    for (int y = eff.start; y <= eff.end; ++y)
      nmr_series->values[y] = nmr(region_tally, static_cast<int>(r), y);
  }
  for (const char* index : {"CMI", "MEI", "ANMR"}) {
    auto* country = series(index, "MX", "per 100");
    for (int y = eff.start; y <= eff.end; ++y)
      country->values[y] = index == std::string("CMI")   ? cmi(state_tally, y)
                           : index == std::string("MEI") ? mei(state_tally, y)
                                                         : anmr(state_tally, y);
    for (Region r : all_regions()) {
      std::vector<int> members;
      for (State s : regions.states_in(r)) members.push_back(static_cast<int>(s));
      auto* regional = series(index, std::string(region_code(r)), "per 100");
      for (int y = eff.start; y <= eff.end; ++y)
        regional->values[y] = index == std::string("CMI")   ? cmi(state_tally, y, members)
                              : index == std::string("MEI") ? mei(state_tally, y, members)
                                                            : anmr(state_tally, y, members);
    }
  }
  for (State s : all_states()) {
    auto* density_series = series("density", std::string(state_code(s)), "per 1,000");
    for (int y = eff.start; y <= eff.end; ++y)
      density_series->values[y] = scholar_density(presence, population, s, y);
  }
  return out;
}

namespace {

std::vector<MovementObservation> trim_pooled(std::vector<MovementObservation> obs,
                                             double fraction) {
  if (obs.empty() || fraction == 0) return obs;
  std::vector<double> totals;
  totals.reserve(obs.size());
  for (const auto& o : obs) totals.push_back(o.total);
  std::sort(totals.begin(), totals.end());
  const auto n = totals.size();
  // Nearest-rank count of observations to drop; everything strictly below
  // the first kept order statistic goes, so cutoff ties survive.
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)) + 0.5);
  const double threshold = totals[std::min(k, n - 1)];
  std::vector<MovementObservation> kept;
  kept.reserve(obs.size());
  for (auto& o : obs)
    if (o.total >= threshold) kept.push_back(std::move(o));
  return kept;
}

}  // namespace

std::vector<MovementObservation> trim_low_movement(std::vector<MovementObservation> obs,
                                                   double fraction, TrimMode mode) {
  if (fraction < 0 || fraction >= 1)
    throw Error("TRIM_BAD_FRACTION", "trim fraction must be in [0,1)");
  if (mode == TrimMode::Pooled) return trim_pooled(std::move(obs), fraction);
  std::map<int, std::vector<MovementObservation>> by_year;
  for (auto& o : obs) by_year[o.year].push_back(std::move(o));
  std::vector<MovementObservation> kept;
  kept.reserve(obs.size());
  for (auto& [year, group] : by_year)
    for (auto& o : trim_pooled(std::move(group), fraction)) kept.push_back(std::move(o));
  return kept;
}

PopulationTable PopulationTable::load_csv(const std::string& path) {
  const auto table = csv::read(path);
  const int c_state = table.column("state_code");
  const int c_year = table.column("year");
  const int c_pop = table.column("population");
  if (c_state < 0 || c_year < 0 || c_pop < 0)
    throw Error("POP_SCHEMA", "population table needs state_code,year,population: " + path);
  PopulationTable out;
  for (const auto& row : table.rows) {
    const auto s = state_from_code(row[static_cast<std::size_t>(c_state)]);
    const auto y = parse_int(row[static_cast<std::size_t>(c_year)]);
    const auto p = parse_double(row[static_cast<std::size_t>(c_pop)]);
    if (!s || !y || !p) throw Error("POP_BAD_ROW", "bad population row in " + path);
    if (*p <= 0) throw Error("POP_BAD_ROW", "population must be positive in " + path);
    out.values_[{*s, static_cast<int>(*y)}] = *p;
  }
  return out;
}

PopulationTable PopulationTable::from_map(std::map<std::pair<State, int>, double> values) {
  PopulationTable out;
  out.values_ = std::move(values);
  return out;
}

std::optional<double> PopulationTable::get(State s, int year) const {
  const auto it = values_.find({s, year});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> scholar_density(const PresenceTable& presence, const PopulationTable& pop,
                                      State s, int year) {
  const auto p = pop.get(s, year);
  if (!p || *p <= 0) return std::nullopt;
  return static_cast<double>(presence.count(s, year)) / *p * 1000.0;
}

std::map<State, Band> density_bands(const std::map<State, double>& density_in_year) {
  std::map<State, Band> bands;
  if (density_in_year.empty()) return bands;
  std::vector<double> values;
  values.reserve(density_in_year.size());
  for (const auto& [s, d] : density_in_year) values.push_back(d);
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto nearest_rank = [&](double q) {
    const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)) + 0.5);
    return values[std::min(std::max<std::size_t>(r, 1), n) - 1];
  };
  const double q25 = nearest_rank(0.25);
  const double q75 = nearest_rank(0.75);
  for (const auto& [s, d] : density_in_year) {
    if (d <= q25)
      bands[s] = Band::Bottom;
    else if (d > q75)
      bands[s] = Band::Top;
    else
      bands[s] = Band::Middle;
  }
  return bands;
}

std::map<State, Trajectory> trajectory_bands(
    const std::map<State, std::map<int, double>>& density_by_state) {
  if (density_by_state.size() < 4)
    throw Error("BANDS_TOO_FEW", "trajectory bands need at least 4 states");
  int first_year = 0, last_year = 0;
  bool have_years = false;
  for (const auto& [s, series] : density_by_state)
    for (const auto& [y, d] : series) {
      if (!have_years) {
        first_year = last_year = y;
        have_years = true;
      }
      first_year = std::min(first_year, y);
      last_year = std::max(last_year, y);
    }
  if (!have_years || first_year == last_year)
    throw Error("BANDS_TOO_FEW", "trajectory bands need at least 2 years");

  std::map<State, double> first_density, last_density;
  for (const auto& [s, series] : density_by_state) {
    const auto f = series.find(first_year);
    const auto l = series.find(last_year);
    if (f != series.end() && l != series.end()) {
      first_density[s] = f->second;
      last_density[s] = l->second;
    }
  }
  const auto first_bands = density_bands(first_density);
  const auto last_bands = density_bands(last_density);

  std::map<State, Trajectory> out;
  for (const auto& [s, b0] : first_bands) {
    const Band b1 = last_bands.at(s);
    if (static_cast<int>(b1) > static_cast<int>(b0))
      out[s] = Trajectory::Progress;
    else if (static_cast<int>(b1) < static_cast<int>(b0))
      out[s] = Trajectory::Regression;
    else
      out[s] = Trajectory::NoChange;
  }
  return out;
}

std::map<std::string, AuthorFacts> author_facts(const Corpus& corpus) {
  std::map<std::string, std::map<std::string, long long>> pubs;  // author -> pub -> citations
  for (const auto& rec : corpus.records) {
    auto& by_pub = pubs[rec.revised_author_id];
    auto [it, inserted] = by_pub.emplace(rec.publication_id, rec.citation_count);
    if (!inserted) it->second = std::max(it->second, rec.citation_count);
  }
  std::map<std::string, AuthorFacts> out;
  for (const auto& [author, by_pub] : pubs) {
    AuthorFacts f;
    f.publications = static_cast<long long>(by_pub.size());
    for (const auto& [pub, cites] : by_pub) f.citations += cites;
    out[author] = f;
  }
  return out;
}

CohortStats cohort_stats(const std::vector<ScholarTimeline>& timelines,
                         const std::map<std::string, std::vector<MoveEvent>>& moves_by_author,
                         const std::map<std::string, AuthorFacts>& facts, int reference_year) {
  struct Accum {
    std::vector<double> ages, pubs, rates;
    std::size_t flagged = 0;
  };
  Accum mobile, non_mobile;
  for (const auto& tl : timelines) {
    if (tl.record_count <= 1) continue;  // single-record authors are out of scope
    const auto mv = moves_by_author.find(tl.author_id);
    const bool moved = mv != moves_by_author.end() && !mv->second.empty();
    Accum& acc = moved ? mobile : non_mobile;

    const int age = reference_year - tl.first_pub_year;
    acc.ages.push_back(age);
    const auto f = facts.find(tl.author_id);
    const double publications = f == facts.end() ? 0.0 : static_cast<double>(f->second.publications);
    acc.pubs.push_back(publications);
    if (age <= 0) {
      ++acc.flagged;
    } else if (f != facts.end()) {
      acc.rates.push_back(static_cast<double>(f->second.citations) / static_cast<double>(age));
    }
  }
  auto finish = [](const Accum& a) {
    CohortGroupStats g;
    g.n = a.ages.size();
    g.median_academic_age = median_of(a.ages);
    g.median_publications = median_of(a.pubs);
    g.median_citations_per_year = median_of(a.rates);
    g.flagged_zero_age = a.flagged;
    return g;
  };
  return {finish(mobile), finish(non_mobile)};
}

DestinationShares destination_shares(
    const std::map<std::string, std::vector<MoveEvent>>& moves_by_author,
    const std::map<std::string, State>& origin_of_author, const RegionMap& regions,
    double trim_fraction, TrimMode trim_mode) {
  std::map<std::pair<State, int>, std::array<double, kNumRegions>> counts;
  std::map<std::pair<State, int>, double> totals;
  for (const auto& [author, moves] : moves_by_author) {
    const auto origin_it = origin_of_author.find(author);
    if (origin_it == origin_of_author.end()) continue;
    for (const auto& m : moves) {
      const std::pair<State, int> key{origin_it->second, m.year};
      auto [it, inserted] = counts.emplace(key, std::array<double, kNumRegions>{});
      it->second[static_cast<std::size_t>(regions.region_of(m.to))] += 1;
      totals[key] += 1;
    }
  }

  std::vector<MovementObservation> obs;
  obs.reserve(totals.size());
  for (const auto& [key, total] : totals)
    obs.push_back({std::string(state_code(key.first)), key.second, total});
  const auto kept = trim_low_movement(std::move(obs), trim_fraction, trim_mode);
  std::set<std::pair<std::string, int>> kept_keys;
  for (const auto& o : kept) kept_keys.insert({o.area, o.year});

  DestinationShares out;
  for (const auto& [key, by_region] : counts) {
    if (!kept_keys.count({std::string(state_code(key.first)), key.second})) {
      out.cells[key] = std::nullopt;
      continue;
    }
    std::array<double, kNumRegions> shares{};
    const double total = totals.at(key);
    for (std::size_t r = 0; r < kNumRegions; ++r) shares[r] = by_region[r] / total;
    out.cells[key] = shares;
  }
  return out;
}

}  // namespace migraflow
