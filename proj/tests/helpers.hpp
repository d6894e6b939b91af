#pragma once

// Shared fixtures and independent oracles for the test binaries. Oracles
// here must stay brute-force: they are the reference implementations the
// library is checked against.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "migraflow/gazetteer.hpp"
#include "migraflow/pipeline.hpp"
#include "migraflow/record.hpp"
#include "migraflow/state.hpp"

namespace testutil {

inline const migraflow::Gazetteer& default_gazetteer() {
  static const migraflow::Gazetteer g =
      migraflow::Gazetteer::load_dir(migraflow::default_gazetteer_dir());
  return g;
}

inline const migraflow::RegionMap& default_regions() {
  static const migraflow::RegionMap r =
      migraflow::RegionMap::load_csv(migraflow::default_region_map_path());
  return r;
}

inline migraflow::AuthorshipRecord make_record(const std::string& record_id,
                                               const std::string& author_id, int year,
                                               const std::string& publication_id = "") {
  migraflow::AuthorshipRecord rec;
  rec.record_id = record_id;
  rec.raw_author_id = author_id;
  rec.revised_author_id = author_id;
  rec.publication_id = publication_id.empty() ? "pub_" + record_id : publication_id;
  rec.year = year;
  return rec;
}

// Plain Pearson correlation, the reference for degree statistics.
inline std::optional<double> pearson_oracle(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.empty() || x.size() != y.size()) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// All set partitions of {0..n-1} as restricted growth strings.
inline std::vector<std::vector<int>> enumerate_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  const auto recurse = [&](auto&& self, int i, int max_used) -> void {
    if (i == n) {
      out.push_back(assignment);
      return;
    }
    for (int m = 0; m <= max_used + 1; ++m) {
      assignment[static_cast<std::size_t>(i)] = m;
      self(self, i + 1, std::max(max_used, m));
    }
  };
  recurse(recurse, 0, -1);
  return out;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("migraflow_test_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& rel) const { return (path / rel).string(); }
};

}  // namespace testutil
