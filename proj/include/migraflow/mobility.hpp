#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "migraflow/record.hpp"

namespace migraflow {

// Per-author history of yearly modal states, over resolved records only.
struct ScholarTimeline {
  std::string author_id;  // revised author id
  std::map<int, std::set<State>> modal_by_year;
  std::map<int, std::map<State, int>> raw_counts_by_year;
  int first_pub_year = 0;
  std::size_t record_count = 0;

  std::vector<int> years() const;
};

struct MoveEvent {
  std::string author_id;
  State from;
  State to;
  int year;               // floor((y1 + y2) / 2)
  int observed_y1;
  int observed_y2;
};

// States attaining the maximum frequency; multi-modal years keep every tie.
std::set<State> modal_states(const std::map<State, int>& counts_in_year);

// Builds one timeline per author from records with a resolved state.
// state_of_record: record_id -> state; records without an entry are skipped.
std::vector<ScholarTimeline> build_timelines(const Corpus& corpus,
                                             const std::map<std::string, State>& state_of_record);

// Walks publication years in order carrying a current state; a move fires
// only when the new modal set no longer contains the carried state. When the
// new modal set is itself tied, the carry goes to the state with the most
// records that year, residual ties breaking alphabetically by code.
std::vector<MoveEvent> detect_moves(const ScholarTimeline& tl);

// Scholar stock per state and year, built by padding each publication year
// two years in both directions (clipped to the window). Pads from
// publications in different states split at the move year: years before it
// count for the origin, the move year onward for the destination.
class PresenceTable {
 public:
  PresenceTable(const YearWindow& window) : window_(window) {}

  long long count(State s, int year) const;
  void add(State s, int year, long long delta = 1);
  const YearWindow& window() const { return window_; }
  YearWindow effective_window() const { return window_.effective(); }

  // (state, year) cells with a nonzero stock, ordered.
  std::vector<std::tuple<State, int, long long>> cells() const;

 private:
  YearWindow window_;
  std::map<std::pair<State, int>, long long> counts_;
};

PresenceTable pad_presence(const std::vector<ScholarTimeline>& timelines,
                           const YearWindow& window);

struct CohortSplit {
  std::vector<std::string> mobile;             // multi-record authors with moves
  std::vector<std::string> non_mobile;         // multi-record authors without moves
  std::vector<std::string> single_record;      // excluded from mobility analysis

  double mobile_share() const {
    const auto multi = mobile.size() + non_mobile.size();
    return multi == 0 ? 0.0 : static_cast<double>(mobile.size()) / static_cast<double>(multi);
  }
};

CohortSplit cohort_split(const std::vector<ScholarTimeline>& timelines,
                         const std::map<std::string, std::vector<MoveEvent>>& moves_by_author);

// Detected moves for every timeline, keyed by author id.
std::map<std::string, std::vector<MoveEvent>> detect_all_moves(
    const std::vector<ScholarTimeline>& timelines);

// Initial carried state of the timeline: the academic origin used by the
// origin-destination analysis.
State academic_origin(const ScholarTimeline& tl);

}  // namespace migraflow
