#include "migraflow/mobility.hpp"

#include <algorithm>

#include "migraflow/util.hpp"

namespace migraflow {

namespace {

// Carry target inside a modal set: most records that year, then smallest
// state code alphabetically. (Members of a modal set tie on raw counts by
// definition, so in practice this is the alphabetical rule.)
State pick_carry(const std::set<State>& modal, const std::map<State, int>& raw_counts) {
  State best = *modal.begin();
  int best_count = -1;
  for (State s : modal) {
    const auto it = raw_counts.find(s);
    const int count = it == raw_counts.end() ? 0 : it->second;
    if (count > best_count ||
        (count == best_count && state_code(s) < state_code(best))) {
      best = s;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

std::vector<int> ScholarTimeline::years() const {
  std::vector<int> out;
  out.reserve(modal_by_year.size());
  for (const auto& [y, states] : modal_by_year) out.push_back(y);
  return out;
}

std::set<State> modal_states(const std::map<State, int>& counts_in_year) {
  if (counts_in_year.empty())
    throw Error("MOBILITY_NO_RECORDS", "modal_states needs at least one resolved record");
  int best = 0;
  for (const auto& [s, n] : counts_in_year) best = std::max(best, n);
  std::set<State> out;
  for (const auto& [s, n] : counts_in_year)
    if (n == best) out.insert(s);
  return out;
}

std::vector<ScholarTimeline> build_timelines(const Corpus& corpus,
                                             const std::map<std::string, State>& state_of_record) {
  // Sort record references canonically so the result is independent of the
  // corpus ordering.
  std::map<std::string, std::vector<const AuthorshipRecord*>> by_author;
  for (const auto& rec : corpus.records) by_author[rec.revised_author_id].push_back(&rec);

  std::vector<ScholarTimeline> out;
  out.reserve(by_author.size());
  for (auto& [author, recs] : by_author) {
    std::sort(recs.begin(), recs.end(), [](const AuthorshipRecord* a, const AuthorshipRecord* b) {
      if (a->year != b->year) return a->year < b->year;
      return a->record_id < b->record_id;
    });
    ScholarTimeline tl;
    tl.author_id = author;
    tl.record_count = recs.size();
    for (const auto* rec : recs) {
      const auto it = state_of_record.find(rec->record_id);
      if (it == state_of_record.end()) continue;  // unresolved or discarded
      ++tl.raw_counts_by_year[rec->year][it->second];
    }
    if (tl.raw_counts_by_year.empty()) continue;  // no resolved publication year
    for (const auto& [year, counts] : tl.raw_counts_by_year)
      tl.modal_by_year[year] = modal_states(counts);
    tl.first_pub_year = tl.modal_by_year.begin()->first;
    out.push_back(std::move(tl));
  }
  return out;
}

State academic_origin(const ScholarTimeline& tl) {
  const auto& [year, modal] = *tl.modal_by_year.begin();
  return pick_carry(modal, tl.raw_counts_by_year.at(year));
}

std::vector<MoveEvent> detect_moves(const ScholarTimeline& tl) {
  std::vector<MoveEvent> moves;
  if (tl.modal_by_year.size() < 2) return moves;

  auto it = tl.modal_by_year.begin();
  State carried = pick_carry(it->second, tl.raw_counts_by_year.at(it->first));
  int prev_year = it->first;
  for (++it; it != tl.modal_by_year.end(); ++it) {
    const int year = it->first;
    const auto& modal = it->second;
    if (modal.count(carried) == 0) {
      const State next = pick_carry(modal, tl.raw_counts_by_year.at(year));
      // Midpoint of the two processed years, rounded down.
      const int move_year = (prev_year + year) / 2;
      moves.push_back({tl.author_id, carried, next, move_year, prev_year, year});
      carried = next;
    }
    prev_year = year;
  }
  return moves;
}

std::map<std::string, std::vector<MoveEvent>> detect_all_moves(
    const std::vector<ScholarTimeline>& timelines) {
  std::map<std::string, std::vector<MoveEvent>> out;
  std::vector<std::vector<MoveEvent>> results(timelines.size());
  parallel_for(timelines.size(), [&](std::size_t i) { results[i] = detect_moves(timelines[i]); });
  for (std::size_t i = 0; i < timelines.size(); ++i)
    out[timelines[i].author_id] = std::move(results[i]);
  return out;
}

long long PresenceTable::count(State s, int year) const {
  const auto it = counts_.find({s, year});
  return it == counts_.end() ? 0 : it->second;
}

void PresenceTable::add(State s, int year, long long delta) {
  counts_[{s, year}] += delta;
}

std::vector<std::tuple<State, int, long long>> PresenceTable::cells() const {
  std::vector<std::tuple<State, int, long long>> out;
  for (const auto& [key, n] : counts_)
    if (n != 0) out.emplace_back(key.first, key.second, n);
  return out;
}

PresenceTable pad_presence(const std::vector<ScholarTimeline>& timelines,
                           const YearWindow& window) {
  PresenceTable table(window);
  for (const auto& tl : timelines) {
    // Coverage: union of [pub_year - 2, pub_year + 2], clipped to the window.
    std::set<int> covered;
    for (const auto& [year, modal] : tl.modal_by_year)
      for (int y = year - 2; y <= year + 2; ++y)
        if (window.contains(y)) covered.insert(y);

    // The author's state as a function of time: the carried state between
    // moves. Years before a move belong to its origin, the move year and
    // later to its destination.
    const auto moves = detect_moves(tl);
    auto state_at = [&](int year) {
      State s = academic_origin(tl);
      for (const auto& m : moves)
        if (m.year <= year) s = m.to;
      return s;
    };
    for (int y : covered) table.add(state_at(y), y);
  }
  return table;
}

CohortSplit cohort_split(const std::vector<ScholarTimeline>& timelines,
                         const std::map<std::string, std::vector<MoveEvent>>& moves_by_author) {
  CohortSplit split;
  for (const auto& tl : timelines) {
    if (tl.record_count <= 1) {
      split.single_record.push_back(tl.author_id);
      continue;
    }
    const auto it = moves_by_author.find(tl.author_id);
    const bool moved = it != moves_by_author.end() && !it->second.empty();
    (moved ? split.mobile : split.non_mobile).push_back(tl.author_id);
  }
  return split;
}

}  // namespace migraflow
