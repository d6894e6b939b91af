#include "migraflow/state.hpp"

#include <map>

#include "migraflow/csv.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

namespace {

struct StateInfo {
  std::string_view code;
  std::string_view name;
};

constexpr std::array<StateInfo, kNumStates> kStates{{
    {"AGU", "Aguascalientes"},
    {"BCN", "Baja California"},
    {"BCS", "Baja California Sur"},
    {"CAM", "Campeche"},
    {"CHP", "Chiapas"},
    {"CHH", "Chihuahua"},
    {"COA", "Coahuila"},
    {"COL", "Colima"},
    {"DUR", "Durango"},
    {"GUA", "Guanajuato"},
    {"GRO", "Guerrero"},
    {"HID", "Hidalgo"},
    {"JAL", "Jalisco"},
    {"MEX", "Mexico State"},
    {"CMX", "Mexico City"},
    {"MIC", "Michoacan"},
    {"MOR", "Morelos"},
    {"NAY", "Nayarit"},
    {"NLE", "Nuevo Leon"},
    {"OAX", "Oaxaca"},
    {"PUE", "Puebla"},
    {"QUE", "Queretaro"},
    {"ROO", "Quintana Roo"},
    {"SLP", "San Luis Potosi"},
    {"SIN", "Sinaloa"},
    {"SON", "Sonora"},
    {"TAB", "Tabasco"},
    {"TAM", "Tamaulipas"},
    {"TLA", "Tlaxcala"},
    {"VER", "Veracruz"},
    {"YUC", "Yucatan"},
    {"ZAC", "Zacatecas"},
}};

constexpr std::array<std::string_view, kNumRegions> kRegionCodes{
    "North", "Center", "PacificCoast", "CapitalArea", "GulfYucatan"};

}  // namespace

std::string_view state_code(State s) { return kStates[static_cast<std::size_t>(s)].code; }
std::string_view state_name(State s) { return kStates[static_cast<std::size_t>(s)].name; }

std::optional<State> state_from_code(std::string_view code) {
  for (std::size_t i = 0; i < kStates.size(); ++i)
    if (kStates[i].code == code) return static_cast<State>(i);
  return std::nullopt;
}

const std::array<State, kNumStates>& all_states() {
  static const auto states = [] {
    std::array<State, kNumStates> a{};
    for (int i = 0; i < kNumStates; ++i) a[static_cast<std::size_t>(i)] = static_cast<State>(i);
    return a;
  }();
  return states;
}

std::string_view region_code(Region r) { return kRegionCodes[static_cast<std::size_t>(r)]; }

std::optional<Region> region_from_code(std::string_view code) {
  for (std::size_t i = 0; i < kRegionCodes.size(); ++i)
    if (kRegionCodes[i] == code) return static_cast<Region>(i);
  return std::nullopt;
}

const std::array<Region, kNumRegions>& all_regions() {
  static const std::array<Region, kNumRegions> regions{
      Region::North, Region::Center, Region::PacificCoast, Region::CapitalArea,
      Region::GulfYucatan};
  return regions;
}

RegionMap RegionMap::from_pairs(const std::vector<std::pair<State, Region>>& pairs) {
  std::array<bool, kNumStates> seen{};
  RegionMap m;
  for (const auto& [s, r] : pairs) {
    const auto idx = static_cast<std::size_t>(s);
    if (seen[idx])
      throw Error("REGION_MAP_DUPLICATE",
                  "state mapped twice: " + std::string(state_code(s)));
    seen[idx] = true;
    m.map_[idx] = r;
  }
  for (int i = 0; i < kNumStates; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw Error("REGION_MAP_INCOMPLETE",
                  "state missing from region table: " +
                      std::string(state_code(static_cast<State>(i))));
  return m;
}

RegionMap RegionMap::load_csv(const std::string& path) {
  const auto table = csv::read(path);
  const int c_state = table.column("state_code");
  const int c_region = table.column("region");
  if (c_state < 0 || c_region < 0)
    throw Error("REGION_MAP_SCHEMA", "region table needs state_code,region columns: " + path);
  std::vector<std::pair<State, Region>> pairs;
  for (const auto& row : table.rows) {
    const auto s = state_from_code(row[static_cast<std::size_t>(c_state)]);
    const auto r = region_from_code(row[static_cast<std::size_t>(c_region)]);
    if (!s) throw Error("REGION_MAP_BAD_STATE", "unknown state code: " + row[static_cast<std::size_t>(c_state)]);
    if (!r) throw Error("REGION_MAP_BAD_REGION", "unknown region: " + row[static_cast<std::size_t>(c_region)]);
    pairs.emplace_back(*s, *r);
  }
  return from_pairs(pairs);
}

std::vector<State> RegionMap::states_in(Region r) const {
  std::vector<State> out;
  for (State s : all_states())
    if (region_of(s) == r) out.push_back(s);
  return out;
}

}  // namespace migraflow
