#include <algorithm>
#include <bit>
#include <cmath>

#include "doctest.h"
#include "hier/bruteforce.hpp"
#include "hier/io.hpp"
#include "hier/noiseless.hpp"

using namespace hier;

namespace {

std::vector<ElementId> labels(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

std::vector<char> mask_of(const BinaryHierarchy& h, std::initializer_list<NodeId> nodes) {
  std::vector<char> m(h.node_count(), 0);
  for (NodeId v : nodes) m[v] = 1;
  return m;
}

}  // namespace

TEST_CASE("partition examples") {
  const auto els = labels({"a", "b", "c", "d"});
  SUBCASE("balanced truth") {
    ExactOracle o(from_newick("((a,b),(c,d));"));
    const auto part = partition_around(els, "a", "c", o);
    CHECK(part.a == labels({"a", "b"}));
    CHECK(part.b == labels({"c", "d"}));
    CHECK(part.c.empty());
    CHECK(o.queries_used() == 2);
  }
  SUBCASE("caterpillar truth") {
    ExactOracle o(from_newick("(((a,b),c),d);"));
    const auto part = partition_around(els, "a", "b", o);
    CHECK(part.a == labels({"a"}));
    CHECK(part.b == labels({"b"}));
    CHECK(part.c == labels({"c", "d"}));
  }
  SUBCASE("random rounds cost |els| - 2") {
    Rng rng = make_rng(1);
    const auto truth = random_hierarchy(20, rng);
    ExactOracle o(truth);
    const auto all = truth.elements();
    for (int i = 0; i < 10; ++i) {
      const auto before = o.queries_used();
      const auto part = partition_round(all, o, rng);
      CHECK(o.queries_used() - before == 18);
      CHECK(part.a.size() + part.b.size() + part.c.size() == 20);
      CHECK(part.pivot_a != part.pivot_b);
    }
  }
  CHECK_THROWS_AS(partition_around(labels({"a", "b"}), "a", "b", *std::make_unique<ExactOracle>(from_newick("(a,b);"))),
                  std::invalid_argument);
}

TEST_CASE("partition pivots are uniform ordered pairs") {
  Rng rng = make_rng(9);
  ExactOracle o(from_newick("((a,b),(c,d));"));
  const auto els = labels({"a", "b", "c", "d"});
  std::map<std::pair<ElementId, ElementId>, int> freq;
  const int draws = 24000;
  for (int i = 0; i < draws; ++i) {
    const auto part = partition_round(els, o, rng);
    ++freq[{part.pivot_a, part.pivot_b}];
  }
  CHECK(freq.size() == 12);
  const double sigma = std::sqrt(draws * (1.0 / 12) * (11.0 / 12));
  for (const auto& [pivots, c] : freq) CHECK(std::abs(c - draws / 12.0) <= 4 * sigma);
}

TEST_CASE("merge") {
  SUBCASE("three leaves") {
    ExactOracle o(from_newick("((a,b),c);"));
    const auto out = merge(BinaryHierarchy("a"), BinaryHierarchy("b"), BinaryHierarchy("c"), o);
    CHECK(canonical_form(out) == "((a,b),c)");
    CHECK(o.queries_used() == 0);
  }
  SUBCASE("empty third part") {
    ExactOracle o(from_newick("((a,b),(c,d));"));
    const auto out = merge(from_newick("(a,b);"), from_newick("(c,d);"), BinaryHierarchy(), o);
    CHECK(canonical_form(out) == "((a,b),(c,d))");
    CHECK(o.queries_used() == 0);
  }
  SUBCASE("walk stops at the sibling cluster root") {
    // Six-leaf caterpillar: (((((a,b),c),d),e),f). With A={a}, B={b} the
    // joined pair belongs next to c, two levels down from the root of C.
    const auto truth = from_newick("(((((a,b),c),d),e),f);");
    ExactOracle o(truth);
    const auto tc = from_newick("(((c,d),e),f);");
    const auto out = merge(BinaryHierarchy("a"), BinaryHierarchy("b"), tc, o);
    CHECK(equivalent(out, truth));
    CHECK(o.queries_used() == 3);  // root, (c,d,e), (c,d), then leaf c
  }
}

TEST_CASE("quick clustering") {
  Rng rng = make_rng(17);
  SUBCASE("trivial inputs need no queries") {
    ExactOracle o(from_newick("(a,b);"));
    CHECK(canonical_form(quick_clustering(labels({"a"}), o, rng)) == "a");
    CHECK(canonical_form(quick_clustering(labels({"b", "a"}), o, rng)) == "(a,b)");
    CHECK(o.queries_used() == 0);
  }
  SUBCASE("exhaustive small truths") {
    for (std::size_t n = 3; n <= 6; ++n) {
      for (const auto& truth : enumerate(n)) {
        ExactOracle o(truth);
        const auto els = truth.elements();
        CHECK(canonical_form(quick_clustering(els, o, rng)) == canonical_form(truth));
      }
    }
  }
  SUBCASE("agrees with exhaustive reconstruction at n = 7") {
    for (int rep = 0; rep < 20; ++rep) {
      const auto truth = random_hierarchy(7, rng);
      ExactOracle a(truth), b(truth);
      const auto els = truth.elements();
      CHECK(canonical_form(quick_clustering(els, a, rng)) == canonical_form(reconstruct_exhaustive(b, els)));
    }
  }
  SUBCASE("random truths up to 64 leaves") {
    for (std::size_t n : {8, 16, 33, 64}) {
      for (int rep = 0; rep < 20; ++rep) {
        const auto truth = random_hierarchy(n, rng);
        ExactOracle o(truth);
        QuickStats stats;
        const auto els = truth.elements();
        const auto out = quick_clustering(els, o, rng, &stats);
        CHECK(equivalent(out, truth));
        CHECK(stats.partition_queries + stats.merge_queries == o.queries_used());
        // Merge never asks more than |X| queries per call.
        CHECK(stats.merge_queries <= n * stats.rounds_per_call.size());
      }
    }
  }
}

TEST_CASE("quick clustering split condition and rounds") {
  Rng rng = make_rng(23);
  QuickStats stats;
  for (int rep = 0; rep < 300; ++rep) {
    const auto truth = rep % 2 ? random_hierarchy(64, rng) : caterpillar_hierarchy(default_labels(64));
    ExactOracle o(truth);
    const auto els = truth.elements();
    CHECK(equivalent(quick_clustering(els, o, rng, &stats), truth));
  }
  CHECK(stats.mean_rounds() <= 43.0);
}

TEST_CASE("a partition round on a caterpillar succeeds often enough") {
  // Success means max(|A|,|B|,|C|) <= 15/16 |X|; the floor is 3/128 per round.
  Rng rng = make_rng(29);
  const std::size_t n = 32;
  const auto truth = caterpillar_hierarchy(default_labels(n));
  ExactOracle o(truth);
  const auto els = truth.elements();
  const int trials = 100000;
  int ok = 0;
  for (int i = 0; i < trials; ++i) {
    const auto part = partition_round(els, o, rng);
    ok += 16 * std::max({part.a.size(), part.b.size(), part.c.size()}) <= 15 * n;
  }
  const double floor = 3.0 / 128;
  const double sigma = std::sqrt(floor * (1 - floor) / trials);
  CHECK(ok / double(trials) >= floor - 3 * sigma);
}

TEST_CASE("separator") {
  const auto cat = caterpillar_hierarchy(labels({"a", "b", "c", "d"}));
  const NodeId u1 = cat.parent(cat.leaf_of("a"));
  const NodeId u2 = cat.parent(cat.leaf_of("c"));
  std::vector<char> all(cat.node_count(), 1);
  // Largest parts: u1 -> 5, u2 -> 3, root -> 5.
  CHECK(separator(cat, all) == u2);
  CHECK(separator(cat, mask_of(cat, {u1, u2})) == u2);
  CHECK(separator(cat, mask_of(cat, {cat.leaf_of("a"), u1})) == u1);
  CHECK_THROWS_AS(separator(cat, mask_of(cat, {u1})), std::invalid_argument);

  Rng rng = make_rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto h = random_hierarchy(2 + rep % 20, rng);
    std::vector<char> m(h.node_count(), 1);
    CHECK_FALSE(h.is_leaf(separator(h, m)));
  }
}

TEST_CASE("find sibling") {
  const auto h = caterpillar_hierarchy(labels({"a", "b", "c", "d"}));
  SUBCASE("one query to reach c") {
    ExactOracle o(from_newick("(((a,b),(c,x)),d);"));
    CHECK(find_sibling(h, "x", o) == h.leaf_of("c"));
    CHECK(o.queries_used() == 1);
  }
  SUBCASE("three nodes need exactly one query") {
    const auto pair = from_newick("(a,b);");
    for (const char* truth : {"((a,x),b);", "(a,(b,x));", "((a,b),x);"}) {
      ExactOracle o(from_newick(truth));
      const NodeId v = find_sibling(pair, "x", o);
      CHECK(o.queries_used() == 1);
      auto placed = pair;
      placed.insert_sibling(v, "x");
      CHECK(canonical_form(placed) == canonical_form(from_newick(truth)));
    }
  }
  SUBCASE("29 nodes need at most four queries") {
    const auto l = default_labels(16);
    const auto cat = caterpillar_hierarchy(std::span(l).first(15));
    REQUIRE(cat.node_count() == 29);
    for (NodeId target = 0; target < cat.node_count(); ++target) {
      auto truth = cat;
      truth.insert_sibling(target, "x16");
      ExactOracle o(truth);
      CHECK(find_sibling(cat, "x16", o) == target);
      CHECK(o.queries_used() <= 4);
    }
  }
}

TEST_CASE("each answer keeps the sibling and halves the candidates") {
  Rng rng = make_rng(41);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rep % 40;
    const auto truth = random_hierarchy(n, rng);
    const auto els = truth.elements();
    const ElementId x = els[uniform_index(rng, n)];
    std::vector<ElementId> rest;
    for (const auto& e : els) {
      if (e != x) rest.push_back(e);
    }
    const auto h = induced_tree(truth, rest);
    const NodeId target = true_sibling(truth, h, x);
    ExactOracle o(truth);
    SiblingSearch search(h);
    while (!search.done()) {
      const std::size_t before = search.remaining();
      search.apply(pivot_query(o, h, search.pivot(), x));
      CHECK(search.candidates()[target]);
      CHECK(search.remaining() <= (before + 1) / 2);
    }
    CHECK(search.result() == target);
    CHECK(search.queries() <= static_cast<std::size_t>(std::floor(std::log2(h.node_count()))));
  }
}

TEST_CASE("insertion clustering") {
  Rng rng = make_rng(5);
  SUBCASE("two elements") {
    ExactOracle o(from_newick("(a,b);"));
    CHECK(canonical_form(insertion_clustering(labels({"a", "b"}), o)) == "(a,b)");
    CHECK(o.queries_used() == 0);
  }
  SUBCASE("sixteen leaves within n log n") {
    for (int rep = 0; rep < 100; ++rep) {
      const auto truth = random_hierarchy(16, rng);
      ExactOracle o(truth);
      auto els = truth.elements();
      shuffle(std::span(els), rng);
      std::vector<std::size_t> per;
      CHECK(equivalent(insertion_clustering(els, o, &per), truth));
      CHECK(o.queries_used() <= 64);
      std::size_t sum = 0;
      for (auto q : per) sum += q;
      CHECK(sum == o.queries_used());
    }
  }
  SUBCASE("every insertion order of a four-leaf truth") {
    const auto truth = from_newick("((a,c),(b,d));");
    auto els = labels({"a", "b", "c", "d"});
    int orders = 0;
    do {
      ExactOracle o(truth);
      CHECK(equivalent(insertion_clustering(els, o), truth));
      ++orders;
    } while (std::next_permutation(els.begin(), els.end()));
    CHECK(orders == 24);
  }
  SUBCASE("exhaustive truths up to six leaves") {
    for (std::size_t n = 3; n <= 6; ++n) {
      for (const auto& truth : enumerate(n)) {
        ExactOracle o(truth);
        const auto els = truth.elements();
        CHECK(canonical_form(insertion_clustering(els, o)) == canonical_form(truth));
      }
    }
  }
}
