#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migraflow/mobility.hpp"
#include "migraflow/record.hpp"
#include "migraflow/state.hpp"

namespace migraflow {

enum class Scope { StateLevel, RegionLevel };

// Entries, exits, stocks and event counts per area and year over the
// effective window. At region level a move inside one region is not a
// migration event at all: it contributes no entry, no exit and no event.
class FlowTally {
 public:
  FlowTally(Scope scope, const YearWindow& effective_window, const RegionMap& regions);

  Scope scope() const { return scope_; }
  const YearWindow& years() const { return window_; }
  int n_areas() const { return static_cast<int>(area_names_.size()); }
  const std::vector<std::string>& area_names() const { return area_names_; }

  int year_index(int year) const;  // -1 when outside the window

  double entries(int area, int year) const { return entries_(area, year_index_checked(year)); }
  double exits(int area, int year) const { return exits_(area, year_index_checked(year)); }
  double stock(int area, int year) const { return stock_(area, year_index_checked(year)); }
  double events(int year) const { return events_(year_index_checked(year)); }

  void add_move(State from, State to, int year);
  void set_stock(State s, int year, double n);

  const Eigen::MatrixXd& entries_matrix() const { return entries_; }
  const Eigen::MatrixXd& exits_matrix() const { return exits_; }
  const Eigen::MatrixXd& stock_matrix() const { return stock_; }

 private:
  int year_index_checked(int year) const;
  int area_of(State s) const;

  Scope scope_;
  YearWindow window_;
  RegionMap regions_;
  std::vector<std::string> area_names_;
  Eigen::MatrixXd entries_;  // areas x years
  Eigen::MatrixXd exits_;
  Eigen::MatrixXd stock_;
  Eigen::VectorXd events_;   // per year
};

// Counts entries/exits at the move year and takes stocks from the presence
// table; moves outside the effective window are ignored.
FlowTally tally(const std::vector<MoveEvent>& moves, const PresenceTable& presence,
                Scope scope, const RegionMap& regions);

// Eq-style indices; missing (nullopt) wherever a denominator is zero.
std::optional<double> nmr(const FlowTally& t, int area, int year);      // per 1,000
std::optional<double> cmi(const FlowTally& t, int year);                // per 100
std::optional<double> mei(const FlowTally& t, int year);                // per 100, in [0,100]
std::optional<double> anmr(const FlowTally& t, int year);               // per 100

// Same indices restricted to a subset of areas ("sum over member areas").
// The event mass of a subset is half its gross turnover, which reduces to
// the full event count when every area is included.
std::optional<double> cmi(const FlowTally& t, int year, const std::vector<int>& areas);
std::optional<double> mei(const FlowTally& t, int year, const std::vector<int>& areas);
std::optional<double> anmr(const FlowTally& t, int year, const std::vector<int>& areas);

struct MovementObservation {
  std::string area;
  int year = 0;
  double total = 0;  // entries + exits
};

// Pooled: one cutoff over all observations. PerYear: the rule is applied
// within each calendar year separately.
enum class TrimMode { Pooled, PerYear };

// Drops the lowest 15% (nearest-rank) of observations by total movements.
// Observations tied with the first kept value survive, so a flat input is
// passed through untouched.
std::vector<MovementObservation> trim_low_movement(std::vector<MovementObservation> obs,
                                                   double fraction = 0.15,
                                                   TrimMode mode = TrimMode::Pooled);

class PopulationTable {
 public:
  static PopulationTable load_csv(const std::string& path);
  static PopulationTable from_map(std::map<std::pair<State, int>, double> values);

  std::optional<double> get(State s, int year) const;

 private:
  std::map<std::pair<State, int>, double> values_;
};

// Scholars per 1,000 residents; missing when no population is known.
std::optional<double> scholar_density(const PresenceTable& presence, const PopulationTable& pop,
                                      State s, int year);

// One index series for one area; missing years stay nullopt so writers can
// distinguish "undefined" from zero.
struct MeasureSeries {
  std::string index;  // NMR, CMI, MEI, ANMR or density
  std::string area;   // state code, region code or MX for the whole country
  std::string units;  // "per 1,000" or "per 100"
  std::map<int, std::optional<double>> values;
};

// Every series the artifact reports: per-state and per-region NMR, country
// and per-region CMI/MEI/ANMR (member-state sums), per-state density.
std::vector<MeasureSeries> measure_series(const FlowTally& state_tally,
                                          const FlowTally& region_tally,
                                          const PresenceTable& presence,
                                          const PopulationTable& population,
                                          const RegionMap& regions);

enum class Band { Bottom, Middle, Top };
enum class Trajectory { NoChange, Progress, Regression };

// Bands states by density into bottom 25% / middle 50% / top 25%
// (nearest-rank, value ties share a band) in the first and final year;
// the trajectory compares the two bands.
std::map<State, Trajectory> trajectory_bands(
    const std::map<State, std::map<int, double>>& density_by_state);

std::map<State, Band> density_bands(const std::map<State, double>& density_in_year);

struct AuthorFacts {
  long long publications = 0;  // distinct publication ids
  long long citations = 0;     // summed over distinct publications
};

std::map<std::string, AuthorFacts> author_facts(const Corpus& corpus);

struct CohortGroupStats {
  std::size_t n = 0;
  double median_academic_age = 0;
  double median_publications = 0;
  double median_citations_per_year = 0;
  std::size_t flagged_zero_age = 0;  // excluded from the per-year ratio
};

struct CohortStats {
  CohortGroupStats mobile;
  CohortGroupStats non_mobile;  // multi-record authors without moves
};

CohortStats cohort_stats(const std::vector<ScholarTimeline>& timelines,
                         const std::map<std::string, std::vector<MoveEvent>>& moves_by_author,
                         const std::map<std::string, AuthorFacts>& facts, int reference_year = 2019);

// Destination-region shares per (academic origin state, year). Cells whose
// movement totals fall in the trimmed tail are emitted as missing, not zero.
struct DestinationShares {
  // (origin, year) -> shares by region, summing to 1; nullopt when trimmed
  std::map<std::pair<State, int>, std::optional<std::array<double, kNumRegions>>> cells;
};

DestinationShares destination_shares(
    const std::map<std::string, std::vector<MoveEvent>>& moves_by_author,
    const std::map<std::string, State>& origin_of_author, const RegionMap& regions,
    double trim_fraction = 0.15, TrimMode trim_mode = TrimMode::Pooled);

}  // namespace migraflow
