#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace migraflow {

// The 32 Mexican federal entities, ISO 3166-2:MX codes.
enum class State : std::uint8_t {
  AGU, BCN, BCS, CAM, CHP, CHH, COA, COL,
  DUR, GUA, GRO, HID, JAL, MEX, CMX, MIC,
  MOR, NAY, NLE, OAX, PUE, QUE, ROO, SLP,
  SIN, SON, TAB, TAM, TLA, VER, YUC, ZAC,
};

inline constexpr int kNumStates = 32;

enum class Region : std::uint8_t { North, Center, PacificCoast, CapitalArea, GulfYucatan };

inline constexpr int kNumRegions = 5;

std::string_view state_code(State s);
std::string_view state_name(State s);  // display name, accent-free
std::optional<State> state_from_code(std::string_view code);
const std::array<State, kNumStates>& all_states();

std::string_view region_code(Region r);
std::optional<Region> region_from_code(std::string_view code);
const std::array<Region, kNumRegions>& all_regions();

// State -> region grouping. Loaded from an editable CSV table
// (state_code,region); the table must cover all 32 states exactly once.
class RegionMap {
 public:
  static RegionMap load_csv(const std::string& path);
  static RegionMap from_pairs(const std::vector<std::pair<State, Region>>& pairs);

  Region region_of(State s) const { return map_[static_cast<std::size_t>(s)]; }
  std::vector<State> states_in(Region r) const;

 private:
  RegionMap() = default;
  std::array<Region, kNumStates> map_{};
};

}  // namespace migraflow
