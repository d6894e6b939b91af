#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migraflow/mobility.hpp"
#include "migraflow/state.hpp"

namespace migraflow {

// Directed weighted migration network over the fixed 32-state node set.
// weight(i,j) counts moves i->j whose move year lies in the window.
class MigrationNetwork {
 public:
  MigrationNetwork(const YearWindow& window);

  const YearWindow& window() const { return window_; }
  double weight(State from, State to) const {
    return weights_(static_cast<int>(from), static_cast<int>(to));
  }
  void add_move(State from, State to, double w = 1.0);

  const Eigen::MatrixXd& weights() const { return weights_; }
  Eigen::VectorXd in_weight() const { return weights_.colwise().sum().transpose(); }
  Eigen::VectorXd out_weight() const { return weights_.rowwise().sum(); }
  Eigen::VectorXd in_degree() const;   // unweighted
  Eigen::VectorXd out_degree() const;  // unweighted
  int edge_count() const;              // present directed edges
  double total_weight() const { return weights_.sum(); }

 private:
  YearWindow window_;
  Eigen::MatrixXd weights_;  // 32 x 32, zero diagonal
};

MigrationNetwork build(const std::vector<MoveEvent>& moves, const YearWindow& window);

// Unweighted edge density: present edges / (n * (n - 1)) with n = 32.
double network_density(const MigrationNetwork& net);

// Pearson correlation between weighted in- and out-degree over all nodes;
// missing when either degree sequence has zero variance.
std::optional<double> degree_correlation(const MigrationNetwork& net);

enum class AssortativityMode { OutIn, InIn, InOut, OutOut };

// Joint distribution over (target-side degree j, source-side degree k) of
// directed edge instances, with marginals and their standard deviations.
// An edge of weight w contributes w instances in the weighted variant.
struct DegreeMixing {
  std::map<std::pair<long long, long long>, double> joint;  // (j, k) -> probability
  std::map<long long, double> q_in;                         // marginal over j
  std::map<long long, double> q_out;                        // marginal over k
  double sigma_in = 0;
  double sigma_out = 0;
};

DegreeMixing degree_mixing(const MigrationNetwork& net, AssortativityMode mode, bool weighted);

// r(G) = sum_jk j*k*(e_jk - q_j q_k) / (sigma_in * sigma_out), which equals
// the Pearson correlation between the endpoint degree values across edge
// instances. Undefined when an endpoint degree sequence is constant.
std::optional<double> assortativity(const MigrationNetwork& net,
                                    AssortativityMode mode = AssortativityMode::OutIn,
                                    bool weighted = true);

// Random-walk flow model for the map equation. With teleport > 0 the walker
// follows out-links with probability 1-teleport and otherwise jumps to a
// node drawn by incoming edge weight ("smart" teleportation, unrecorded:
// teleport steps never count as module exits). teleport = 0 needs a
// strongly connected weight structure to be meaningful.
struct FlowOptions {
  double teleport = 0.15;
};

struct FlowModel {
  Eigen::VectorXd visit;      // stationary visit rates, sums to 1 when flow exists
  Eigen::MatrixXd link_flow;  // per-edge flow, rows = sources
};

FlowModel compute_flow(const MigrationNetwork& net, const FlowOptions& opts = {});

struct Partition {
  std::vector<int> module_of;         // one module id per node
  Eigen::VectorXd node_flow;          // visit rate per node
  std::map<int, double> module_flow;  // visit mass by module
  std::map<int, double> module_exit;  // exit flow by module
  double codelength = 0;              // bits
  // Modules over nodes that touch an edge; isolates sit in their own
  // zero-flow singletons and are not counted here.
  int active_modules = 0;

  int n_modules() const;
  std::vector<std::vector<State>> module_members() const;
};

// Two-level map equation in bits: index codebook entropy weighted by total
// exit flow plus per-module codebook entropies weighted by visit+exit flow.
// With everything in one module this reduces to the entropy of the visit
// rates.
double codelength(const FlowModel& flow, const std::vector<int>& module_of);

// Greedy node-move passes plus module merges, restarted `trials` times with
// seeded shuffles; the best partition found is returned (never worse than
// the single-module partition). Deterministic given (seed, trials).
Partition detect_communities(const MigrationNetwork& net, std::uint64_t seed, int trials,
                             const FlowOptions& opts = {});

// Builds Partition bookkeeping (flows, exits, codelength) for a given
// module assignment.
Partition make_partition(const FlowModel& flow, std::vector<int> module_of);

// Alluvial diagram data: per-year community blocks with heights
// proportional to flow, plus node-sharing ribbons between consecutive
// years. Blocks are emitted largest-flow first until `coverage` of the
// year's total flow is shown.
std::string alluvial_export(const std::map<int, Partition>& partitions_by_year,
                            double coverage = 0.99);

}  // namespace migraflow
