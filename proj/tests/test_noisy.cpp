#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "doctest.h"
#include "hier/io.hpp"
#include "hier/noiseless.hpp"
#include "hier/noisy.hpp"

using namespace hier;

namespace {

struct Instance {
  BinaryHierarchy truth;
  BinaryHierarchy partial;
  ElementId x;
  NodeId target;
};

Instance make_instance(std::size_t n, Rng& rng) {
  Instance inst{random_hierarchy(n, rng), {}, {}, kNoNode};
  const auto els = inst.truth.elements();
  inst.x = els[uniform_index(rng, n)];
  std::vector<ElementId> rest;
  for (const auto& e : els) {
    if (e != inst.x) rest.push_back(e);
  }
  inst.partial = induced_tree(inst.truth, rest);
  inst.target = true_sibling(inst.truth, inst.partial, inst.x);
  return inst;
}

// Random response that is correct with probability p, otherwise a uniformly
// chosen wrong one among the other options.
WalkResponse noisy_walk_response(const Adjacency& tree, const std::vector<std::size_t>& dist_to_target,
                                 std::size_t q, double p, Rng& rng) {
  std::vector<WalkResponse> options{WalkResponse::here()};
  for (std::size_t u : tree[q]) options.push_back(WalkResponse::toward_node(u));
  std::size_t right = 0;
  for (std::size_t i = 1; i < options.size(); ++i) {
    if (dist_to_target[options[i].toward] + 1 == dist_to_target[q]) right = i;
  }
  if (options.size() == 1 || bernoulli(rng, p)) return options[right];
  std::size_t k = uniform_index(rng, options.size() - 1);
  if (k >= right) ++k;
  return options[k];
}

}  // namespace

TEST_CASE("choose_kp") {
  CHECK(choose_kp(0.9) == 11);
  CHECK(choose_kp(0.8) == 13);
  int last = choose_kp(0.55);
  for (double p = 0.6; p < 0.96; p += 0.05) {
    const int k = choose_kp(p);
    CHECK(k % 2 == 1);
    CHECK(k <= last);
    CHECK(1 - std::exp(-k * (2 * p - 1) * (2 * p - 1) / 2) >= std::sqrt(p));
    if (k > 1) CHECK(1 - std::exp(-(k - 2) * (2 * p - 1) * (2 * p - 1) / 2) < std::sqrt(p));
    last = k;
  }
  CHECK_THROWS_AS(choose_kp(0.5), std::invalid_argument);
  CHECK_THROWS_AS(choose_kp(1.0), std::invalid_argument);
}

TEST_CASE("lambda diagnostic") {
  // p = 0.8: (1 + 0.8 log2 0.8 + 0.2 log2 0.2) / (2 log2 4) = 0.27807 / 4.
  CHECK(mw_lambda(0.8) == doctest::Approx(0.0695179).epsilon(1e-5));
  CHECK(mw_lambda(0.9) > mw_lambda(0.7));
}

TEST_CASE("vertex query simulation with an exact oracle") {
  Rng rng = make_rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = make_instance(7, rng);
    for (NodeId v = 0; v < inst.partial.node_count(); ++v) {
      ExactOracle o(inst.truth);
      const auto r = simulate_vertex_query(inst.partial, v, inst.x, o, 1);
      CHECK(r == true_vertex_response(inst.partial, inst.target, v));
      if (inst.partial.is_root(v) || inst.partial.is_leaf(v)) CHECK(o.queries_used() == 1);
      CHECK(o.queries_used() <= 2);
    }
  }
}

TEST_CASE("vertex query simulation cost and accuracy under noise") {
  Rng rng = make_rng(4);
  const int k = choose_kp(0.8);
  SUBCASE("cost bounds") {
    for (int rep = 0; rep < 20; ++rep) {
      const auto inst = make_instance(12, rng);
      NoisyOracle o(inst.truth, NoiseModel::uniform(0.8), rep);
      for (NodeId v = 0; v < inst.partial.node_count(); ++v) {
        const auto before = o.queries_used();
        simulate_vertex_query(inst.partial, v, inst.x, o, k);
        const auto used = o.queries_used() - before;
        if (inst.partial.is_root(v) || inst.partial.is_leaf(v)) {
          CHECK(used == 1);
        } else {
          CHECK(used <= static_cast<std::uint64_t>(2 * k));
          CHECK(used >= static_cast<std::uint64_t>(k));
        }
      }
    }
  }
  SUBCASE("accuracy at a fixed internal vertex") {
    // Target is the vertex itself, which needs both stages to be right.
    const auto truth = from_newick("((((a,b),x),c),d);");
    const auto h = from_newick("(((a,b),c),d);");
    const NodeId v = h.parent(h.leaf_of("a"));
    for (const auto& model : {NoiseModel::uniform(0.8), NoiseModel::fixed(0.8)}) {
      NoisyOracle o(truth, model, 55);
      const int trials = 10000;
      int right = 0;
      for (int i = 0; i < trials; ++i) right += simulate_vertex_query(h, v, "x", o, k).is_here();
      CHECK(right / double(trials) >= 0.8);
    }
  }
}

TEST_CASE("mw consistent sets match component membership") {
  Rng rng = make_rng(5);
  const auto h = random_hierarchy(15, rng);
  MultiplicativeWeights mw(h, MWConfig{0.8, 0.1});
  for (NodeId v = 0; v < h.node_count(); ++v) {
    for (NodeId t = 0; t < h.node_count(); ++t) {
      const auto r = true_vertex_response(h, t, v);
      const auto ok = mw.consistent_nodes(v, r);
      // Node u agrees with r exactly when it would produce the same answer as target.
      for (NodeId u = 0; u < h.node_count(); ++u) CHECK(bool(ok[u]) == (true_vertex_response(h, u, v) == r));
    }
  }
  CHECK_THROWS_AS(mw.consistent_nodes(h.root(), VertexResponse::toward_node(h.root())), std::invalid_argument);
}

TEST_CASE("mw with perfect answers isolates the target") {
  Rng rng = make_rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto h = random_hierarchy(32, rng);
    const NodeId target = static_cast<NodeId>(uniform_index(rng, h.node_count()));
    MultiplicativeWeights mw(h, MWConfig{1.0, 0.1});
    while (!mw.done()) {
      const NodeId v = mw.query();
      mw.update(v, true_vertex_response(h, target, v));
    }
    const auto& lw = mw.log_weights();
    CHECK(std::isfinite(lw[target]));
    for (NodeId u = 0; u < h.node_count(); ++u) {
      if (u != target) CHECK(lw[u] == -std::numeric_limits<double>::infinity());
    }
    CHECK(mw.top().front() == target);
  }
}

TEST_CASE("mw weights stay positive and the kept set has the configured size") {
  Rng rng = make_rng(7);
  const auto h = random_hierarchy(128, rng);
  const MWConfig cfg{0.8, 0.05};
  const NodeId target = 17;
  MultiplicativeWeights mw(h, cfg);
  CHECK(mw.rounds() == static_cast<std::size_t>(std::ceil(8 * (std::log2(255.0) + std::log(20.0)))));
  while (!mw.done()) {
    const NodeId v = mw.query();
    auto r = true_vertex_response(h, target, v);
    if (bernoulli(rng, 0.2)) r = VertexResponse::toward_node(h.neighbors(v).front());
    mw.update(v, r);
  }
  for (double w : mw.log_weights()) CHECK(std::isfinite(w));
  const auto top = mw.top();
  CHECK(top.size() == static_cast<std::size_t>(std::ceil(4 * (std::log2(255.0) + std::log(20.0)))));
  std::set<NodeId> unique(top.begin(), top.end());
  CHECK(unique.size() == top.size());
  for (std::size_t i = 1; i < top.size(); ++i) CHECK(mw.log_weights()[top[i - 1]] >= mw.log_weights()[top[i]]);

  // Small trees keep every node.
  const auto tiny = random_hierarchy(3, rng);
  MultiplicativeWeights all(tiny, cfg);
  CHECK(all.top().size() == tiny.node_count());
}

TEST_CASE("walk iteration count") {
  CHECK(walk_iterations(10, 0.75, 0.01) == 148);
  CHECK(walk_iterations(100, 0.75, 0.01) == 404);
  CHECK(walk_iterations(0, 1.0, 0.5) == 6);
  CHECK_THROWS_AS(walk_iterations(3, 0.5, 0.1), std::invalid_argument);
}

TEST_CASE("walk with perfect answers lands on the target") {
  Rng rng = make_rng(8);
  for (int rep = 0; rep < 60; ++rep) {
    const auto h = random_hierarchy(2 + uniform_index(rng, 40), rng);
    const auto tree = undirected(h);
    const std::size_t target = uniform_index(rng, tree.size());
    const std::size_t start = uniform_index(rng, tree.size());
    const auto dist = bfs_distances(tree, target);
    TreeWalker walker(tree, 0.75, 0.01, start, target);
    std::int64_t last = *walker.initial_potential();
    while (!walker.done()) {
      walker.step(noisy_walk_response(tree, dist, walker.current(), 1.0, rng));
      CHECK(*walker.trace().back().potential == last - 1);
      last = *walker.trace().back().potential;
    }
    CHECK(walker.result() == target);
  }
}

TEST_CASE("walk potential moves by one per step and the counter invariant holds") {
  Rng rng = make_rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    const auto h = random_hierarchy(30, rng);
    const auto tree = undirected(h);
    const std::size_t target = uniform_index(rng, tree.size());
    const auto dist = bfs_distances(tree, target);
    TreeWalker walker(tree, 0.7, 0.05, uniform_index(rng, tree.size()), target);
    std::int64_t last = *walker.initial_potential();
    while (!walker.done()) {
      const std::size_t q = walker.current();
      const auto r = noisy_walk_response(tree, dist, q, 0.7, rng);
      const bool correct = q == target ? r.kind == WalkResponse::Kind::Here
                                       : r.kind == WalkResponse::Kind::Toward && dist[r.toward] + 1 == dist[q];
      walker.step(r);
      const std::int64_t now = *walker.trace().back().potential;
      if (correct) {
        CHECK(now == last - 1);
      } else {
        CHECK(now <= last + 1);
      }
      CHECK(walker.positive_counters() <= 1);
      last = now;
    }
    if (last < 0) CHECK(walker.result() == target);
  }
}

TEST_CASE("walk trace export") {
  Adjacency path{{1}, {0, 2}, {1}};
  TreeWalker walker(path, 1.0, 0.5, 0, 2);
  walker.step(WalkResponse::toward_node(1));
  walker.step(WalkResponse::toward_node(2));
  walker.step(WalkResponse::here());
  const auto csv = walker.trace_csv();
  CHECK(csv.rfind("iteration,q,response,counter,potential\n", 0) == 0);
  CHECK(csv.find("1,1,toward:1,0,1\n") != std::string::npos);
  CHECK(csv.find("3,2,here,1,-1\n") != std::string::npos);
  CHECK_THROWS_AS(walker.step(WalkResponse::toward_node(0)), std::invalid_argument);
}

TEST_CASE("walk elsewhere responses only spend counters") {
  Adjacency path{{1}, {0}};
  TreeWalker walker(path, 1.0, 0.5, 0);
  walker.step(WalkResponse::elsewhere());
  CHECK(walker.current() == 0);
  walker.step(WalkResponse::here());
  walker.step(WalkResponse::elsewhere());
  CHECK(walker.counters()[0] == 0);
  CHECK(walker.current() == 0);
  CHECK(walker.trace_csv().find("3,0,elsewhere,0,\n") != std::string::npos);
}

TEST_CASE("robust search with p = 1 matches the noiseless search") {
  Rng rng = make_rng(10);
  const auto cfg = RobustConfig::make(1.0, 0.1);
  CHECK(cfg.k_p == 1);
  for (int rep = 0; rep < 60; ++rep) {
    const auto inst = make_instance(2 + uniform_index(rng, 63), rng);
    ExactOracle a(inst.truth), b(inst.truth);
    RobustStats stats;
    const NodeId got = robust_find_sibling(inst.partial, inst.x, a, cfg, &stats);
    CHECK(got == find_sibling(inst.partial, inst.x, b));
    CHECK(got == inst.target);
    CHECK(stats.ordinal_queries == a.queries_used());
  }
}

TEST_CASE("robust search under noise") {
  Rng rng = make_rng(11);
  const auto cfg = RobustConfig::make(0.8, 0.05);
  CHECK(cfg.mw.delta == doctest::Approx(0.025));
  const int trials = 60;
  int right = 0;
  for (int t = 0; t < trials; ++t) {
    const auto inst = make_instance(64, rng);
    NoisyOracle o(inst.truth, NoiseModel::uniform(0.8), 1000 + t);
    right += robust_find_sibling(inst.partial, inst.x, o, cfg) == inst.target;
  }
  // A light version of the acceptance run; failures here are very unlikely.
  CHECK(right >= trials - 3);
}

TEST_CASE("robust search as a step machine") {
  Rng rng = make_rng(12);
  const auto inst = make_instance(20, rng);
  NoisyOracle o(inst.truth, NoiseModel::uniform(0.9), 4);
  RobustSiblingSearch search(inst.partial, RobustConfig::make(0.9, 0.1));
  std::size_t steps = 0;
  while (!search.done()) {
    search.apply(pivot_query(o, inst.partial, search.pivot(), inst.x));
    ++steps;
  }
  CHECK(steps == o.queries_used());
  CHECK(search.stats().ordinal_queries == steps);
  CHECK(search.stats().vertex_queries > 0);
  CHECK_THROWS_AS(search.pivot(), std::logic_error);

  RobustSiblingSearch single(BinaryHierarchy("a"), RobustConfig::make(0.9, 0.1));
  CHECK(single.done());
  CHECK(single.result() == 0);
}

TEST_CASE("robust search walk trace with a known target") {
  Rng rng = make_rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = make_instance(24, rng);
    NoisyOracle o(inst.truth, NoiseModel::uniform(0.8), 70 + rep);
    RobustSiblingSearch search(inst.partial, RobustConfig::make(0.8, 0.1), inst.target);
    while (!search.done()) search.apply(pivot_query(o, inst.partial, search.pivot(), inst.x));
    REQUIRE(search.walker() != nullptr);
    const auto& trace = search.walker()->trace();
    CHECK(trace.size() == search.walker()->iterations());
    const auto idx = search.contracted()->index_of(inst.target);
    CHECK(trace.back().potential.has_value() == idx.has_value());
    if (idx && *trace.back().potential < 0) CHECK(search.result() == inst.target);
  }
}

TEST_CASE("noisy insertion clustering") {
  Rng rng = make_rng(13);
  SUBCASE("p = 1 recovers exactly") {
    for (std::size_t n : {2, 3, 10, 40, 128}) {
      const auto truth = random_hierarchy(n, rng);
      ExactOracle o(truth);
      const auto els = truth.elements();
      CHECK(equivalent(noisy_insertion_clustering(els, o, 1.0, 0.1), truth));
    }
  }
  SUBCASE("p = 0.8 small instance") {
    int ok = 0;
    for (int t = 0; t < 10; ++t) {
      const auto truth = random_hierarchy(16, rng);
      NoisyOracle o(truth, NoiseModel::uniform(0.8), t);
      auto els = truth.elements();
      shuffle(std::span(els), rng);
      std::vector<RobustStats> per;
      ok += equivalent(noisy_insertion_clustering(els, o, 0.8, 0.1, {}, &per), truth);
      std::uint64_t sum = 0;
      for (const auto& s : per) sum += s.ordinal_queries;
      CHECK(sum == o.queries_used());
    }
    CHECK(ok >= 9);
  }
}

TEST_CASE("constants file") {
  const std::string path = "noisy_constants_test.json";
  {
    std::ofstream out(path);
    out << R"({"c_rounds": 5.5, "c_keep": 2, "note": "x"})";
  }
  const auto c = NoisyConstants::load(path);
  CHECK(c.c_rounds == 5.5);
  CHECK(c.c_keep == 2.0);
  std::remove(path.c_str());
  CHECK_THROWS(NoisyConstants::load("missing-file.json"));
}
