#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "helpers.hpp"
#include "migraflow/flownet.hpp"
#include "migraflow/util.hpp"

using namespace migraflow;

namespace {

MoveEvent move(State from, State to, int year) {
  return {"a", from, to, year, year - 1, year + 1};
}

MigrationNetwork net_from_edges(const std::vector<std::tuple<int, int, double>>& edges) {
  MigrationNetwork net({2000, 2000});
  for (const auto& [i, j, w] : edges)
    net.add_move(static_cast<State>(i), static_cast<State>(j), w);
  return net;
}

// Brute-force assortativity: expand every edge into weight many instances
// and correlate the endpoint degree values directly.
std::optional<double> assortativity_oracle(const MigrationNetwork& net, AssortativityMode mode,
                                           bool weighted) {
  const Eigen::VectorXd win = net.in_weight();
  const Eigen::VectorXd wout = net.out_weight();
  const Eigen::VectorXd din = net.in_degree();
  const Eigen::VectorXd dout = net.out_degree();
  std::vector<double> source_side, target_side;
  for (int i = 0; i < kNumStates; ++i) {
    for (int j = 0; j < kNumStates; ++j) {
      const double w = net.weights()(i, j);
      if (w <= 0) continue;
      const int copies = weighted ? static_cast<int>(std::llround(w)) : 1;
      const bool source_out =
          mode == AssortativityMode::OutIn || mode == AssortativityMode::OutOut;
      const bool target_in = mode == AssortativityMode::OutIn || mode == AssortativityMode::InIn;
      const double sv = weighted ? (source_out ? wout[i] : win[i]) : (source_out ? dout[i] : din[i]);
      const double tv = weighted ? (target_in ? win[j] : wout[j]) : (target_in ? din[j] : dout[j]);
      for (int c = 0; c < copies; ++c) {
        source_side.push_back(sv);
        target_side.push_back(tv);
      }
    }
  }
  return testutil::pearson_oracle(source_side, target_side);
}

MigrationNetwork random_network(Rng& rng, int n_nodes, double edge_prob, int max_weight) {
  MigrationNetwork net({2000, 2000});
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j)
      if (i != j && rng.bernoulli(edge_prob))
        net.add_move(static_cast<State>(i), static_cast<State>(j),
                     static_cast<double>(rng.uniform_int(1, max_weight)));
  return net;
}

// Exhaustive minimum codelength over all partitions of the active nodes.
double exhaustive_min_codelength(const MigrationNetwork& net, const FlowOptions& opts,
                                 const std::vector<int>& active) {
  const FlowModel flow = compute_flow(net, opts);
  std::vector<int> base(kNumStates);
  for (int i = 0; i < kNumStates; ++i) base[static_cast<std::size_t>(i)] = 100 + i;  // isolates
  double best = std::numeric_limits<double>::infinity();
  for (const auto& grouping : testutil::enumerate_partitions(static_cast<int>(active.size()))) {
    std::vector<int> module_of = base;
    for (std::size_t k = 0; k < active.size(); ++k)
      module_of[static_cast<std::size_t>(active[k])] = grouping[k];
    best = std::min(best, codelength(flow, module_of));
  }
  return best;
}

}  // namespace

TEST_CASE("build: no moves in window yields an empty 32-node network") {
  const auto net = build({}, {2000, 2001});
  CHECK(net.edge_count() == 0);
  CHECK(net.total_weight() == 0);
  CHECK(network_density(net) == 0.0);
}

TEST_CASE("build: reciprocal moves become a reciprocal edge pair") {
  std::vector<MoveEvent> moves;
  for (int i = 0; i < 5; ++i) {
    moves.push_back(move(State::CMX, State::JAL, 2005));
    moves.push_back(move(State::JAL, State::CMX, 2006));
  }
  moves.push_back(move(State::CMX, State::JAL, 2020));  // outside window
  const auto net = build(moves, {2005, 2006});
  CHECK(net.edge_count() == 2);
  CHECK(net.weight(State::CMX, State::JAL) == 5);
  CHECK(net.weight(State::JAL, State::CMX) == 5);
}

TEST_CASE("build is invariant to the order of the move list") {
  Rng rng(1);
  std::vector<MoveEvent> moves;
  for (int i = 0; i < 50; ++i) {
    const auto from = static_cast<State>(rng.uniform_int(0, 10));
    State to = from;
    while (to == from) to = static_cast<State>(rng.uniform_int(0, 10));
    moves.push_back(move(from, to, 2005));
  }
  const auto a = build(moves, {2005, 2005});
  rng.shuffle(moves);
  const auto b = build(moves, {2005, 2005});
  CHECK(a.weights() == b.weights());
}

TEST_CASE("build rejects an empty window; networks reject self-loops") {
  CHECK_THROWS_AS(build({}, {2005, 2004}), Error);
  MigrationNetwork net({2000, 2000});
  CHECK_THROWS_AS(net.add_move(State::CMX, State::CMX), Error);
}

TEST_CASE("density: zero, complete, and a hand value") {
  MigrationNetwork complete({2000, 2000});
  for (int i = 0; i < kNumStates; ++i)
    for (int j = 0; j < kNumStates; ++j)
      if (i != j) complete.add_move(static_cast<State>(i), static_cast<State>(j));
  CHECK(network_density(complete) == 1.0);

  Rng rng(7);
  MigrationNetwork net({2000, 2000});
  int added = 0;
  while (added < 99) {
    const int i = static_cast<int>(rng.uniform_int(0, kNumStates - 1));
    const int j = static_cast<int>(rng.uniform_int(0, kNumStates - 1));
    if (i == j || net.weight(static_cast<State>(i), static_cast<State>(j)) > 0) continue;
    net.add_move(static_cast<State>(i), static_cast<State>(j));
    ++added;
  }
  CHECK(network_density(net) == doctest::Approx(99.0 / 992.0).epsilon(1e-12));
}

TEST_CASE("degree_correlation: reciprocal networks correlate perfectly") {
  Rng rng(3);
  MigrationNetwork net({2000, 2000});
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j)
      if (rng.bernoulli(0.5)) {
        const double w = static_cast<double>(rng.uniform_int(1, 9));
        net.add_move(static_cast<State>(i), static_cast<State>(j), w);
        net.add_move(static_cast<State>(j), static_cast<State>(i), w);
      }
  CHECK(*degree_correlation(net) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degree_correlation: constant degrees have no defined correlation") {
  // uniform complete graph: every in/out weight equal
  MigrationNetwork net({2000, 2000});
  for (int i = 0; i < kNumStates; ++i)
    for (int j = 0; j < kNumStates; ++j)
      if (i != j) net.add_move(static_cast<State>(i), static_cast<State>(j));
  CHECK(!degree_correlation(net).has_value());
}

TEST_CASE("degree_correlation equals the independent Pearson oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_network(rng, 32, 0.1, 20);
    const Eigen::VectorXd in = net.in_weight();
    const Eigen::VectorXd out = net.out_weight();
    const auto direct = testutil::pearson_oracle(
        std::vector<double>(in.data(), in.data() + in.size()),
        std::vector<double>(out.data(), out.data() + out.size()));
    const auto got = degree_correlation(net);
    REQUIRE(got.has_value() == direct.has_value());
    if (got) CHECK(*got == doctest::Approx(*direct).epsilon(1e-12));
  }
}

TEST_CASE("assortativity: directed 2-cycle is undefined") {
  const auto net = net_from_edges({{0, 1, 1}, {1, 0, 1}});
  CHECK(!assortativity(net, AssortativityMode::OutIn).has_value());
}

TEST_CASE("assortativity: two disjoint reciprocal pairs over 22 instances") {
  const auto net = net_from_edges({{0, 1, 1}, {1, 0, 1}, {2, 3, 10}, {3, 2, 10}});
  const auto got = assortativity(net, AssortativityMode::OutIn);
  const auto oracle = assortativity_oracle(net, AssortativityMode::OutIn, true);
  REQUIRE(got.has_value());
  REQUIRE(oracle.has_value());
  CHECK(std::abs(*got - *oracle) <= 1e-12);
  CHECK(*got == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("assortativity equals the brute-force oracle on 100 seeded graphs") {
  Rng rng(2025);
  int defined = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 32));
    const auto net = random_network(rng, n, 0.2, 12);
    for (const auto mode : {AssortativityMode::OutIn, AssortativityMode::InIn,
                            AssortativityMode::InOut, AssortativityMode::OutOut}) {
      for (const bool weighted : {true, false}) {
        const auto got = assortativity(net, mode, weighted);
        const auto oracle = assortativity_oracle(net, mode, weighted);
        REQUIRE(got.has_value() == oracle.has_value());
        if (got) {
          CHECK(std::abs(*got - *oracle) < 1e-9);
          CHECK(*got >= -1.0 - 1e-12);
          CHECK(*got <= 1.0 + 1e-12);
          ++defined;
        }
      }
    }
  }
  CHECK(defined > 0);
}

TEST_CASE("degree mixing distribution is a proper joint distribution") {
  Rng rng(5);
  const auto net = random_network(rng, 10, 0.4, 5);
  const auto mix = degree_mixing(net, AssortativityMode::OutIn, true);
  double total = 0;
  for (const auto& [jk, p] : mix.joint) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  double qin_sum = 0, qout_sum = 0;
  for (const auto& [j, p] : mix.q_in) qin_sum += p;
  for (const auto& [k, p] : mix.q_out) qout_sum += p;
  CHECK(qin_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(qout_sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mix.sigma_in >= 0);
  CHECK(mix.sigma_out >= 0);
}

TEST_CASE("codelength: one module reduces to the visit-rate entropy") {
  const auto net = net_from_edges({{0, 1, 2}, {1, 0, 2}, {1, 2, 1}, {2, 1, 1}});
  const FlowModel flow = compute_flow(net, {0.0});
  double entropy = 0;
  for (int i = 0; i < kNumStates; ++i) {
    const double p = flow.visit[i];
    if (p > 0) entropy -= p * std::log2(p);
  }
  const std::vector<int> one(kNumStates, 0);
  CHECK(codelength(flow, one) == doctest::Approx(entropy).epsilon(1e-12));
}

TEST_CASE("codelength: hand evaluation of the symmetric two-node graph") {
  // pi = (1/2, 1/2), each link flow 1/2. Singleton modules:
  //   index term: q = 1, H(Q) = 1 bit -> 1
  //   each module: p = exit + visit = 1, H = 1 bit -> 1 each
  // total 3 bits; one module: entropy of (1/2, 1/2) = 1 bit.
  const auto net = net_from_edges({{0, 1, 1}, {1, 0, 1}});
  const FlowModel flow = compute_flow(net, {0.0});
  CHECK(flow.visit[0] == doctest::Approx(0.5).epsilon(1e-9));
  std::vector<int> singletons(kNumStates);
  for (int i = 0; i < kNumStates; ++i) singletons[static_cast<std::size_t>(i)] = i;
  CHECK(codelength(flow, singletons) == doctest::Approx(3.0).epsilon(1e-9));
  const std::vector<int> one(kNumStates, 0);
  CHECK(codelength(flow, one) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("codelength: two disjoint cliques are cheaper split than merged") {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) {
        edges.emplace_back(i, j, 4);
        edges.emplace_back(3 + i, 3 + j, 4);
      }
  const auto net = net_from_edges(edges);
  const FlowModel flow = compute_flow(net, {0.15});
  std::vector<int> split(kNumStates);
  for (int i = 0; i < kNumStates; ++i) split[static_cast<std::size_t>(i)] = i >= 6 ? 50 + i : (i < 3 ? 0 : 1);
  const std::vector<int> merged(kNumStates, 0);
  CHECK(codelength(flow, split) < codelength(flow, merged));
}

TEST_CASE("detect_communities finds the two disjoint clusters exactly") {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) {
        edges.emplace_back(i, j, 3);
        edges.emplace_back(4 + i, 4 + j, 3);
      }
  const auto net = net_from_edges(edges);
  const auto part = detect_communities(net, 7, 10);
  CHECK(part.active_modules == 2);
  for (int i = 1; i < 4; ++i) {
    CHECK(part.module_of[0] == part.module_of[static_cast<std::size_t>(i)]);
    CHECK(part.module_of[4] == part.module_of[static_cast<std::size_t>(4 + i)]);
  }
  CHECK(part.module_of[0] != part.module_of[4]);

  // matches the exhaustive optimum over the 8 active nodes
  std::vector<int> active;
  for (int i = 0; i < 8; ++i) active.push_back(i);
  const double best = exhaustive_min_codelength(net, {0.15}, active);
  CHECK(part.codelength == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("detect_communities: complete uniform 5-node graph is one community") {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) edges.emplace_back(i, j, 2);
  const auto net = net_from_edges(edges);
  const auto part = detect_communities(net, 3, 10);
  CHECK(part.active_modules == 1);

  std::vector<int> active = {0, 1, 2, 3, 4};
  CHECK(part.codelength == doctest::Approx(exhaustive_min_codelength(net, {0.15}, active))
                               .epsilon(1e-9));
}

TEST_CASE("detect_communities never beats nor misses the one-module bound") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = random_network(rng, 8, 0.35, 4);
    if (net.edge_count() == 0) continue;
    const auto part = detect_communities(net, rng.next_u64(), 5);
    const FlowModel flow = compute_flow(net, {0.15});
    CHECK(part.codelength <= codelength(flow, std::vector<int>(kNumStates, 0)) + 1e-12);
  }
}

TEST_CASE("detect_communities is deterministic in (seed, trials)") {
  Rng rng(90);
  const auto net = random_network(rng, 12, 0.3, 6);
  const auto a = detect_communities(net, 1234, 8);
  const auto b = detect_communities(net, 1234, 8);
  CHECK(a.module_of == b.module_of);
  CHECK(a.codelength == b.codelength);
}

TEST_CASE("alluvial export: identical partitions produce identity ribbons") {
  const auto net = net_from_edges({{0, 1, 3}, {1, 0, 3}, {2, 3, 3}, {3, 2, 3}});
  const auto part = detect_communities(net, 5, 5);
  std::map<int, Partition> years{{2000, part}, {2001, part}};
  const auto json_text = alluvial_export(years, 1.0);
  const auto doc = nlohmann::json::parse(json_text);
  REQUIRE(doc.at("years").size() == 2);
  const auto& ribbons = doc.at("ribbons");
  // every ribbon connects a community to itself
  for (const auto& ribbon : ribbons)
    CHECK(ribbon.at("from_community").get<int>() == ribbon.at("to_community").get<int>());
  CHECK(ribbons.size() == 2);  // one per shown community
}

TEST_CASE("alluvial export: one switching node adds one off-diagonal ribbon") {
  const auto net = net_from_edges({{0, 1, 3}, {1, 0, 3}, {2, 3, 3}, {3, 2, 3}, {0, 2, 1}});
  const FlowModel flow = compute_flow(net, {0.15});
  std::vector<int> before(kNumStates);
  for (int i = 0; i < kNumStates; ++i) before[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < 4; ++i) before[static_cast<std::size_t>(i)] = i < 2 ? 0 : 1;
  std::vector<int> after = before;
  after[0] = 1;  // node 0 switches community
  std::map<int, Partition> years{{2000, make_partition(flow, before)},
                                 {2001, make_partition(flow, after)}};
  const auto doc = nlohmann::json::parse(alluvial_export(years, 1.0));
  for (const auto& ribbon : doc.at("ribbons")) CHECK(ribbon.at("nodes").size() >= 1);
  // block 0 in year 2000 has nodes {AGU, BCN}; in year 2001 they sit in
  // different communities, so exactly two ribbons leave it
  int off_diagonal = 0;
  int from_block0 = 0;
  for (const auto& ribbon : doc.at("ribbons"))
    if (ribbon.at("from_year") == 2000 && ribbon.at("from_community") == 0) {
      ++from_block0;
      if (ribbon.at("to_community") != 0) ++off_diagonal;
    }
  CHECK(from_block0 == 2);
  CHECK(off_diagonal == 1);
}

TEST_CASE("alluvial export: coverage 1 emits every flow-carrying community") {
  const auto net = net_from_edges({{0, 1, 30}, {1, 0, 30}, {2, 3, 1}, {3, 2, 1}});
  const auto part = detect_communities(net, 5, 5);
  std::map<int, Partition> years{{2000, part}, {2001, part}};
  const auto full = nlohmann::json::parse(alluvial_export(years, 1.0));
  const auto trimmed = nlohmann::json::parse(alluvial_export(years, 0.9));
  CHECK(full.at("years")[0].at("blocks").size() >= trimmed.at("years")[0].at("blocks").size());
  std::size_t flow_modules = 0;
  for (const auto& [m, f] : part.module_flow)
    if (f > 0) ++flow_modules;
  CHECK(full.at("years")[0].at("blocks").size() == flow_modules);
}

TEST_CASE("alluvial export validates its inputs") {
  const auto net = net_from_edges({{0, 1, 1}, {1, 0, 1}});
  const auto part = detect_communities(net, 1, 2);
  std::map<int, Partition> one{{2000, part}};
  CHECK_THROWS_AS(alluvial_export(one, 0.99), Error);
  std::map<int, Partition> two{{2000, part}, {2001, part}};
  CHECK_THROWS_AS(alluvial_export(two, 0.0), Error);
}
