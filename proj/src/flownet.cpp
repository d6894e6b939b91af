#include "migraflow/flownet.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "migraflow/util.hpp"

namespace migraflow {

namespace {

constexpr double kLog2 = 0.6931471805599453;  // ln 2

double plogp(double p) { return p > 0 ? p * std::log(p) / kLog2 : 0.0; }

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() != y.size() || x.empty()) return std::nullopt;
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

}  // namespace

MigrationNetwork::MigrationNetwork(const YearWindow& window) : window_(window) {
  if (window.start > window.end)
    throw Error("NETWORK_EMPTY_WINDOW", "network window is empty");
  weights_ = Eigen::MatrixXd::Zero(kNumStates, kNumStates);
}

void MigrationNetwork::add_move(State from, State to, double w) {
  if (from == to) throw Error("NETWORK_SELF_LOOP", "self-loops are not allowed");
  weights_(static_cast<int>(from), static_cast<int>(to)) += w;
}

Eigen::VectorXd MigrationNetwork::in_degree() const {
  return (weights_.array() > 0).cast<double>().colwise().sum().transpose();
}

Eigen::VectorXd MigrationNetwork::out_degree() const {
  return (weights_.array() > 0).cast<double>().rowwise().sum();
}

int MigrationNetwork::edge_count() const {
  return static_cast<int>((weights_.array() > 0).count());
}

MigrationNetwork build(const std::vector<MoveEvent>& moves, const YearWindow& window) {
  MigrationNetwork net(window);
  for (const auto& m : moves)
    if (window.contains(m.year)) net.add_move(m.from, m.to);
  return net;
}

double network_density(const MigrationNetwork& net) {
  return static_cast<double>(net.edge_count()) /
         static_cast<double>(kNumStates * (kNumStates - 1));
}

std::optional<double> degree_correlation(const MigrationNetwork& net) {
  const Eigen::VectorXd in = net.in_weight();
  const Eigen::VectorXd out = net.out_weight();
  std::vector<double> x(in.data(), in.data() + in.size());
  std::vector<double> y(out.data(), out.data() + out.size());
  return pearson(x, y);
}

DegreeMixing degree_mixing(const MigrationNetwork& net, AssortativityMode mode, bool weighted) {
  const Eigen::VectorXd win = net.in_weight();
  const Eigen::VectorXd wout = net.out_weight();
  const Eigen::VectorXd din = net.in_degree();
  const Eigen::VectorXd dout = net.out_degree();

  auto source_value = [&](int i) -> long long {
    const bool use_out = mode == AssortativityMode::OutIn || mode == AssortativityMode::OutOut;
    const double v = weighted ? (use_out ? wout[i] : win[i]) : (use_out ? dout[i] : din[i]);
    return static_cast<long long>(std::llround(v));
  };
  auto target_value = [&](int j) -> long long {
    const bool use_in = mode == AssortativityMode::OutIn || mode == AssortativityMode::InIn;
    const double v = weighted ? (use_in ? win[j] : wout[j]) : (use_in ? din[j] : dout[j]);
    return static_cast<long long>(std::llround(v));
  };

  DegreeMixing mix;
  double total = 0;
  for (int i = 0; i < kNumStates; ++i) {
    for (int j = 0; j < kNumStates; ++j) {
      const double w = net.weights()(i, j);
      if (w <= 0) continue;
      const double instances = weighted ? w : 1.0;
      mix.joint[{target_value(j), source_value(i)}] += instances;
      total += instances;
    }
  }
  if (total <= 0) return mix;
  double mean_in = 0, mean_out = 0;
  for (auto& [jk, p] : mix.joint) {
    p /= total;
    mix.q_in[jk.first] += p;
    mix.q_out[jk.second] += p;
  }
  for (const auto& [j, p] : mix.q_in) mean_in += static_cast<double>(j) * p;
  for (const auto& [k, p] : mix.q_out) mean_out += static_cast<double>(k) * p;
  double var_in = 0, var_out = 0;
  for (const auto& [j, p] : mix.q_in)
    var_in += (static_cast<double>(j) - mean_in) * (static_cast<double>(j) - mean_in) * p;
  for (const auto& [k, p] : mix.q_out)
    var_out += (static_cast<double>(k) - mean_out) * (static_cast<double>(k) - mean_out) * p;
  mix.sigma_in = std::sqrt(var_in);
  mix.sigma_out = std::sqrt(var_out);
  return mix;
}

std::optional<double> assortativity(const MigrationNetwork& net, AssortativityMode mode,
                                    bool weighted) {
  const DegreeMixing mix = degree_mixing(net, mode, weighted);
  if (mix.joint.empty() || mix.sigma_in <= 0 || mix.sigma_out <= 0) return std::nullopt;
  double mean_in = 0, mean_out = 0;
  for (const auto& [j, p] : mix.q_in) mean_in += static_cast<double>(j) * p;
  for (const auto& [k, p] : mix.q_out) mean_out += static_cast<double>(k) * p;
  double cross = 0;
  for (const auto& [jk, p] : mix.joint)
    cross += static_cast<double>(jk.first) * static_cast<double>(jk.second) * p;
  return (cross - mean_in * mean_out) / (mix.sigma_in * mix.sigma_out);
}

FlowModel compute_flow(const MigrationNetwork& net, const FlowOptions& opts) {
  if (opts.teleport < 0 || opts.teleport >= 1)
    throw Error("FLOW_BAD_TELEPORT", "teleport probability must be in [0,1)");
  FlowModel flow;
  flow.visit = Eigen::VectorXd::Zero(kNumStates);
  flow.link_flow = Eigen::MatrixXd::Zero(kNumStates, kNumStates);
  const double total = net.total_weight();
  if (total <= 0) return flow;

  const Eigen::MatrixXd& w = net.weights();
  const Eigen::VectorXd out_w = net.out_weight();
  // Smart teleportation: jump to the target of a uniformly random edge.
  const Eigen::VectorXd teleport_to = net.in_weight() / total;

  Eigen::VectorXd pi = teleport_to;
  const double tau = opts.teleport;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(kNumStates);
    double teleport_mass = 0;
    for (int i = 0; i < kNumStates; ++i) {
      if (pi[i] <= 0) continue;
      if (out_w[i] > 0) {
        next += (1.0 - tau) * pi[i] / out_w[i] * w.row(i).transpose();
        teleport_mass += tau * pi[i];
      } else {
        teleport_mass += pi[i];  // dangling: teleport with probability 1
      }
    }
    next += teleport_mass * teleport_to;
    // Lazy-walk averaging keeps the iteration convergent on periodic
    // structures without changing the stationary distribution.
    next = 0.5 * pi + 0.5 * next;
    const double delta = (next - pi).cwiseAbs().sum();
    pi = next;
    if (delta < 1e-14) break;
  }

  flow.visit = pi;
  for (int i = 0; i < kNumStates; ++i) {
    if (pi[i] <= 0 || out_w[i] <= 0) continue;
    flow.link_flow.row(i) = (1.0 - tau) * pi[i] / out_w[i] * w.row(i);
  }
  return flow;
}

int Partition::n_modules() const {
  std::set<int> ids;
  for (int m : module_of) ids.insert(m);
  return static_cast<int>(ids.size());
}

std::vector<std::vector<State>> Partition::module_members() const {
  std::map<int, std::vector<State>> by_module;
  for (int i = 0; i < static_cast<int>(module_of.size()); ++i)
    by_module[module_of[static_cast<std::size_t>(i)]].push_back(static_cast<State>(i));
  std::vector<std::vector<State>> out;
  out.reserve(by_module.size());
  for (auto& [id, members] : by_module) out.push_back(std::move(members));
  return out;
}

double codelength(const FlowModel& flow, const std::vector<int>& module_of) {
  if (static_cast<int>(module_of.size()) != kNumStates)
    throw Error("PARTITION_SIZE", "partition must assign all 32 nodes");

  std::map<int, double> module_visit;
  std::map<int, double> module_exit;
  for (int i = 0; i < kNumStates; ++i) module_visit[module_of[static_cast<std::size_t>(i)]] += flow.visit[i];
  for (int i = 0; i < kNumStates; ++i) {
    for (int j = 0; j < kNumStates; ++j) {
      const double f = flow.link_flow(i, j);
      if (f <= 0) continue;
      if (module_of[static_cast<std::size_t>(i)] != module_of[static_cast<std::size_t>(j)])
        module_exit[module_of[static_cast<std::size_t>(i)]] += f;
    }
  }

  double total_exit = 0;
  for (const auto& [m, q] : module_exit) total_exit += q;

  double L = 0;
  if (total_exit > 0) {
    double h = 0;
    for (const auto& [m, q] : module_exit) h -= plogp(q / total_exit);
    L += total_exit * h;
  }
  for (const auto& [m, visit] : module_visit) {
    const double exit = module_exit.count(m) ? module_exit.at(m) : 0.0;
    const double inside = visit + exit;
    if (inside <= 0) continue;
    double h = -plogp(exit / inside);
    for (int i = 0; i < kNumStates; ++i)
      if (module_of[static_cast<std::size_t>(i)] == m) h -= plogp(flow.visit[i] / inside);
    L += inside * h;
  }
  return L;
}

Partition make_partition(const FlowModel& flow, std::vector<int> module_of) {
  // Canonical labels: modules numbered by their first node.
  std::map<int, int> relabel;
  for (int i = 0; i < static_cast<int>(module_of.size()); ++i) {
    const int m = module_of[static_cast<std::size_t>(i)];
    if (!relabel.count(m)) relabel[m] = static_cast<int>(relabel.size());
  }
  for (auto& m : module_of) m = relabel.at(m);

  Partition p;
  p.module_of = std::move(module_of);
  p.node_flow = flow.visit;
  for (int i = 0; i < kNumStates; ++i) p.module_flow[p.module_of[static_cast<std::size_t>(i)]] += flow.visit[i];
  for (int i = 0; i < kNumStates; ++i)
    for (int j = 0; j < kNumStates; ++j) {
      const double f = flow.link_flow(i, j);
      if (f > 0 && p.module_of[static_cast<std::size_t>(i)] != p.module_of[static_cast<std::size_t>(j)])
        p.module_exit[p.module_of[static_cast<std::size_t>(i)]] += f;
    }
  p.codelength = codelength(flow, p.module_of);
  return p;
}

Partition detect_communities(const MigrationNetwork& net, std::uint64_t seed, int trials,
                             const FlowOptions& opts) {
  if (net.edge_count() == 0)
    throw Error("DETECT_NO_EDGES", "community detection needs at least one edge");
  if (trials < 1) throw Error("DETECT_BAD_TRIALS", "trials must be >= 1");
  const FlowModel flow = compute_flow(net, opts);

  // Candidate moves only make sense between modules that share links.
  std::vector<std::vector<int>> neighbors(kNumStates);
  for (int i = 0; i < kNumStates; ++i)
    for (int j = 0; j < kNumStates; ++j)
      if (i != j && (net.weights()(i, j) > 0 || net.weights()(j, i) > 0))
        neighbors[static_cast<std::size_t>(i)].push_back(j);

  std::vector<int> active;
  for (int i = 0; i < kNumStates; ++i)
    if (!neighbors[static_cast<std::size_t>(i)].empty()) active.push_back(i);

  std::vector<std::vector<int>> results(static_cast<std::size_t>(trials));
  std::vector<double> lengths(static_cast<std::size_t>(trials));
  const Rng base(seed);

  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t trial) {
    Rng rng = base.fork(trial);
    std::vector<int> module_of(kNumStates);
    for (int i = 0; i < kNumStates; ++i) module_of[static_cast<std::size_t>(i)] = i;
    double current = codelength(flow, module_of);

    bool improved = true;
    while (improved) {
      improved = false;
      // Node-move pass in random order.
      std::vector<int> order = active;
      rng.shuffle(order);
      for (int node : order) {
        const int home = module_of[static_cast<std::size_t>(node)];
        std::set<int> candidates;
        for (int nb : neighbors[static_cast<std::size_t>(node)])
          candidates.insert(module_of[static_cast<std::size_t>(nb)]);
        candidates.erase(home);
        int best_module = home;
        double best_len = current;
        for (int cand : candidates) {
          module_of[static_cast<std::size_t>(node)] = cand;
          const double len = codelength(flow, module_of);
          if (len < best_len - 1e-13) {
            best_len = len;
            best_module = cand;
          }
        }
        module_of[static_cast<std::size_t>(node)] = best_module;
        if (best_module != home) {
          current = best_len;
          improved = true;
        }
      }
      // Merge pass over connected module pairs.
      bool merged = true;
      while (merged) {
        merged = false;
        std::set<std::pair<int, int>> pairs;
        for (int i : active)
          for (int nb : neighbors[static_cast<std::size_t>(i)]) {
            const int a = module_of[static_cast<std::size_t>(i)];
            const int b = module_of[static_cast<std::size_t>(nb)];
            if (a != b) pairs.insert({std::min(a, b), std::max(a, b)});
          }
        double best_len = current;
        std::pair<int, int> best_pair{-1, -1};
        for (const auto& [a, b] : pairs) {
          std::vector<int> trial_modules = module_of;
          for (auto& m : trial_modules)
            if (m == b) m = a;
          const double len = codelength(flow, trial_modules);
          if (len < best_len - 1e-13) {
            best_len = len;
            best_pair = {a, b};
          }
        }
        if (best_pair.first >= 0) {
          for (auto& m : module_of)
            if (m == best_pair.second) m = best_pair.first;
          current = best_len;
          merged = true;
          improved = true;
        }
      }
    }
    results[trial] = std::move(module_of);
    lengths[trial] = current;
  });

  int best_trial = 0;
  for (int t = 1; t < trials; ++t)
    if (lengths[static_cast<std::size_t>(t)] < lengths[static_cast<std::size_t>(best_trial)])
      best_trial = t;

  std::vector<int> best = results[static_cast<std::size_t>(best_trial)];
  // Never return anything worse than the trivial one-module partition.
  std::vector<int> one_module(kNumStates, 0);
  if (codelength(flow, one_module) < lengths[static_cast<std::size_t>(best_trial)] - 1e-13)
    best = one_module;
  Partition partition = make_partition(flow, std::move(best));
  std::set<int> active_ids;
  for (int i : active) active_ids.insert(partition.module_of[static_cast<std::size_t>(i)]);
  partition.active_modules = static_cast<int>(active_ids.size());
  return partition;
}

std::string alluvial_export(const std::map<int, Partition>& partitions_by_year, double coverage) {
  if (partitions_by_year.size() < 2)
    throw Error("ALLUVIAL_TOO_FEW", "alluvial export needs at least two yearly partitions");
  if (coverage <= 0 || coverage > 1)
    throw Error("ALLUVIAL_BAD_COVERAGE", "coverage must be in (0,1]");

  using json = nlohmann::ordered_json;
  json doc;
  doc["coverage"] = coverage;
  doc["years"] = json::array();

  // Kept (shown) modules per year after the coverage cutoff.
  std::map<int, std::set<int>> shown;
  for (const auto& [year, part] : partitions_by_year) {
    std::vector<std::pair<double, int>> by_flow;  // (-flow, module)
    double total = 0;
    for (const auto& [m, f] : part.module_flow) {
      if (f <= 0) continue;
      by_flow.emplace_back(-f, m);
      total += f;
    }
    std::sort(by_flow.begin(), by_flow.end());
    json blocks = json::array();
    double shown_flow = 0;
    for (const auto& [neg_flow, m] : by_flow) {
      if (total > 0 && shown_flow >= coverage * total - 1e-15) break;
      shown_flow += -neg_flow;
      shown[year].insert(m);
      json block;
      block["community"] = m;
      block["flow"] = -neg_flow;
      block["height"] = -neg_flow;
      json nodes = json::array();
      for (int i = 0; i < kNumStates; ++i)
        if (part.module_of[static_cast<std::size_t>(i)] == m)
          nodes.push_back(std::string(state_code(static_cast<State>(i))));
      block["nodes"] = nodes;
      blocks.push_back(std::move(block));
    }
    json year_entry;
    year_entry["year"] = year;
    year_entry["codelength"] = part.codelength;
    year_entry["blocks"] = std::move(blocks);
    doc["years"].push_back(std::move(year_entry));
  }

  doc["ribbons"] = json::array();
  for (auto it = partitions_by_year.begin(); std::next(it) != partitions_by_year.end(); ++it) {
    const auto& [y1, p1] = *it;
    const auto& [y2, p2] = *std::next(it);
    std::map<std::pair<int, int>, std::vector<int>> shared;
    for (int i = 0; i < kNumStates; ++i) {
      const int m1 = p1.module_of[static_cast<std::size_t>(i)];
      const int m2 = p2.module_of[static_cast<std::size_t>(i)];
      if (shown.at(y1).count(m1) && shown.at(y2).count(m2)) shared[{m1, m2}].push_back(i);
    }
    for (const auto& [pair, nodes] : shared) {
      double weight = 0;
      for (int i : nodes) weight += p1.node_flow[i];
      json ribbon;
      ribbon["from_year"] = y1;
      ribbon["to_year"] = y2;
      ribbon["from_community"] = pair.first;
      ribbon["to_community"] = pair.second;
      ribbon["weight"] = weight;
      json node_list = json::array();
      for (int i : nodes) node_list.push_back(std::string(state_code(static_cast<State>(i))));
      ribbon["nodes"] = node_list;
      doc["ribbons"].push_back(std::move(ribbon));
    }
  }
  return doc.dump(2) + "\n";
}

}  // namespace migraflow
