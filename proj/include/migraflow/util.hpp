#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace migraflow {

// Error with a stable machine-readable code alongside the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Deterministic random generator (splitmix64 core). Samplers are implemented
// here instead of <random> distributions so that a given seed produces the
// same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double unit();

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p);
  double normal(double mean = 0.0, double stdev = 1.0);
  int poisson(double lambda);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw Error("RNG_EMPTY_PICK", "pick from empty vector");
    return v[static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
  }

  // Independent substream; does not advance this generator.
  Rng fork(std::uint64_t salt) const;

 private:
  std::uint64_t state_;
};

// FNV-1a 64-bit, used for artifact content hashes (caching, not security).
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

// Shortest round-trip decimal for doubles; artifacts must be byte-stable.
std::string fmt_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Runs fn(i) for i in [0, n). Thread count is capped by MIGRAFLOW_THREADS.
// Work is partitioned statically so results land in caller-owned slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);
unsigned max_threads();

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace migraflow
