#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "hier/bruteforce.hpp"
#include "hier/hierarchy.hpp"
#include "hier/io.hpp"

using namespace hier;

namespace {

BinaryHierarchy nwk(const char* s) { return from_newick(s); }

std::vector<ElementId> labels(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

// Family {C ∩ S} computed straight from the cluster lists.
LaminarFamily restricted_family(const BinaryHierarchy& h, const std::set<ElementId>& s) {
  LaminarFamily out;
  for (const auto& c : to_laminar(h)) {
    Cluster r;
    for (const auto& e : c) {
      if (s.contains(e)) r.insert(e);
    }
    if (!r.empty()) out.insert(r);
  }
  return out;
}

}  // namespace

TEST_CASE("triplet and answer validation") {
  CHECK_THROWS_AS(Triplet("a", "a", "b"), HierarchyError);
  CHECK_THROWS_AS(Triplet("a", "", "b"), HierarchyError);
  CHECK(Triplet("c", "a", "b") == Triplet("a", "b", "c"));
  CHECK(TripletAnswer("b", "a") == TripletAnswer("a", "b"));
  CHECK(TripletAnswer("b", "a").first() == "a");
  CHECK(TripletAnswer("a", "b").outsider(Triplet("a", "b", "c")) == "c");
  CHECK_THROWS_AS(TripletAnswer("a", "a"), HierarchyError);
}

TEST_CASE("triplet_answer picks the pair with the deepest common ancestor") {
  const auto cat = nwk("(((a,b),c),d);");
  CHECK(triplet_answer(cat, Triplet("a", "b", "d")) == TripletAnswer("a", "b"));
  CHECK(triplet_answer(cat, Triplet("b", "c", "d")) == TripletAnswer("b", "c"));
  const auto bal = nwk("((a,b),(c,d));");
  CHECK(triplet_answer(bal, Triplet("a", "c", "d")) == TripletAnswer("c", "d"));
  CHECK_THROWS_AS(triplet_answer(bal, Triplet("a", "c", "z")), HierarchyError);
}

TEST_CASE("LcaIndex agrees with the direct answer on random trees") {
  Rng rng = make_rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto h = random_hierarchy(9, rng);
    const LcaIndex index(h);
    for (const auto& t : all_triplets(h.elements())) CHECK(index.answer(t) == triplet_answer(h, t));
  }
}

TEST_CASE("equivalence ignores child order") {
  CHECK(equivalent(nwk("((a,b),(c,d));"), nwk("((d,c),(b,a));")));
  CHECK_FALSE(equivalent(nwk("((a,b),(c,d));"), nwk("(((a,b),c),d);")));
  const auto h = nwk("((a,(b,e)),(c,d));");
  CHECK(equivalent(h, h));
  CHECK_THROWS_AS(equivalent(nwk("(a,b);"), nwk("(a,c);")), HierarchyError);
}

TEST_CASE("canonical form") {
  CHECK(canonical_form(nwk("(b,a);")) == "(a,b)");
  CHECK(canonical_form(nwk("((d,c),(b,a));")) == "((a,b),(c,d))");
  CHECK(canonical_form(nwk("(((a,b),c),d);")) == "(((a,b),c),d)");
  CHECK(canonical_form(BinaryHierarchy("solo")) == "solo");
}

TEST_CASE("canonical forms separate every topology up to six leaves") {
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto all = enumerate(n);
    std::set<std::string> forms;
    for (const auto& h : all) forms.insert(canonical_form(h));
    CHECK(forms.size() == all.size());
  }
  // And a relabelled copy with shuffled children has the same form.
  Rng rng = make_rng(3);
  for (const auto& h : enumerate(5)) {
    BinaryHierarchy flipped;
    std::vector<NodeId> image(h.node_count());
    for (NodeId v : h.postorder()) {
      if (h.is_leaf(v)) {
        image[v] = flipped.add_leaf(h.label(v));
      } else if (bernoulli(rng, 0.5)) {
        image[v] = flipped.add_internal(image[h.right(v)], image[h.left(v)]);
      } else {
        image[v] = flipped.add_internal(image[h.left(v)], image[h.right(v)]);
      }
    }
    flipped.set_root(image[h.root()]);
    CHECK(canonical_form(flipped) == canonical_form(h));
    CHECK(equivalent(flipped, h));
  }
}

TEST_CASE("equivalent iff all triplet answers agree (n <= 8)") {
  Rng rng = make_rng(2024);
  int same = 0;
  for (int rep = 0; rep < 400; ++rep) {
    const std::size_t n = 3 + rep % 6;
    const auto a = random_hierarchy(n, rng);
    const auto b = random_hierarchy(n, rng);
    const bool agree = answer_table(a) == answer_table(b);
    CHECK(agree == equivalent(a, b));
    same += agree;
  }
  CHECK(same > 0);  // the n = 3 draws collide often
}

TEST_CASE("laminar conversion") {
  const LaminarFamily expect{{"a"}, {"b"}, {"c"}, {"a", "b"}, {"a", "b", "c"}};
  CHECK(to_laminar(nwk("((a,b),c);")) == expect);
  CHECK(canonical_form(from_laminar({{"a"}, {"b"}, {"a", "b"}})) == "(a,b)");
  CHECK_THROWS_AS(from_laminar({{"a"}, {"b"}, {"c"}, {"a", "b", "c"}}), HierarchyError);
  CHECK_THROWS_AS(from_laminar({{"a"}, {"b"}, {"c"}, {"a", "b"}, {"b", "c"}, {"a", "b", "c"}}), HierarchyError);
  CHECK_THROWS_AS(from_laminar({{"a"}, {"b"}, {"a", "b"}, {}}), HierarchyError);
  CHECK_THROWS_AS(from_laminar({{"a"}, {"a", "b"}}), HierarchyError);

  Rng rng = make_rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto h = random_hierarchy(2 + rep % 12, rng);
    CHECK(equivalent(from_laminar(to_laminar(h)), h));
  }
}

TEST_CASE("induced tree") {
  const auto cat = nwk("(((a,b),c),d);");
  CHECK(canonical_form(induced_tree(cat, labels({"a", "c", "d"}))) == "((a,c),d)");
  CHECK(canonical_form(induced_tree(nwk("((a,b),(c,d));"), labels({"a", "b"}))) == "(a,b)");
  CHECK(equivalent(induced_tree(cat, cat.elements()), cat));
  CHECK_THROWS_AS(induced_tree(cat, labels({"a"})), HierarchyError);
  CHECK_THROWS_AS(induced_tree(cat, labels({"a", "z"})), HierarchyError);
}

TEST_CASE("induced tree matches the restricted family for every subset (n <= 7)") {
  Rng rng = make_rng(77);
  for (std::size_t n = 3; n <= 7; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      const auto h = random_hierarchy(n, rng);
      const auto els = h.elements();
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) < 2) continue;
        std::vector<ElementId> s;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask >> i & 1) s.push_back(els[i]);
        }
        const auto sub = induced_tree(h, s);
        sub.validate();
        CHECK(to_laminar(sub) == restricted_family(h, {s.begin(), s.end()}));
      }
    }
  }
}

TEST_CASE("contracted tree") {
  const auto cat = caterpillar_hierarchy(labels({"a", "b", "c", "d"}));
  const NodeId a = cat.leaf_of("a");
  const NodeId d = cat.leaf_of("d");
  const NodeId root = cat.root();

  SUBCASE("path through the branching root") {
    const std::vector<NodeId> v{a, d};
    const auto t = contracted_tree(cat, v);
    CHECK(t.size() == 3);
    CHECK(t.index_of(root).has_value());
    const auto adj = t.adjacency();
    CHECK(adj[*t.index_of(root)].size() == 2);
    CHECK(adj[*t.index_of(a)].size() == 1);
    CHECK(tree_diameter(adj) == 2);
    // Leaving a, the first real step is a's parent; leaving the root toward a
    // it is the root's left child.
    const auto& from_a = t.edges[*t.index_of(a)];
    CHECK(from_a.front().first_step == cat.parent(a));
    for (const auto& e : t.edges[*t.index_of(root)]) {
      if (t.nodes[e.to] == a) CHECK(e.first_step == cat.left(root));
      if (t.nodes[e.to] == d) CHECK(e.first_step == d);
    }
  }
  SUBCASE("single vertex") {
    const std::vector<NodeId> v{cat.parent(a)};
    const auto t = contracted_tree(cat, v);
    CHECK(t.size() == 1);
    CHECK(t.edges[0].empty());
  }
  SUBCASE("all vertices gives the tree itself") {
    std::vector<NodeId> v(cat.node_count());
    std::iota(v.begin(), v.end(), NodeId{0});
    const auto t = contracted_tree(cat, v);
    CHECK(t.size() == cat.node_count());
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto got = t.adjacency()[i];
      std::vector<NodeId> real;
      for (auto j : got) real.push_back(t.nodes[j]);
      auto nb = cat.neighbors(t.nodes[i]);
      std::sort(real.begin(), real.end());
      std::sort(nb.begin(), nb.end());
      CHECK(real == nb);
    }
  }
  SUBCASE("empty set") {
    CHECK_THROWS_AS(contracted_tree(cat, std::vector<NodeId>{}), HierarchyError);
  }
}

TEST_CASE("contracted trees stay small and connected") {
  Rng rng = make_rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    const auto h = random_hierarchy(40, rng);
    std::vector<NodeId> v;
    const std::size_t k = 1 + uniform_index(rng, 12);
    for (std::size_t i = 0; i < k; ++i) v.push_back(static_cast<NodeId>(uniform_index(rng, h.node_count())));
    const auto t = contracted_tree(h, v);
    const auto adj = t.adjacency();
    std::size_t edges = 0;
    for (const auto& nb : adj) edges += nb.size();
    CHECK(edges == 2 * (t.size() - 1));
    const auto dist = bfs_distances(adj, 0);
    CHECK(std::none_of(dist.begin(), dist.end(), [](std::size_t d) { return d == SIZE_MAX; }));
    CHECK(tree_diameter(adj) <= 2 * t.size());
    for (NodeId c : v) CHECK(t.index_of(c).has_value());
    // Non-candidates are branch points.
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::find(v.begin(), v.end(), t.nodes[i]) == v.end()) CHECK(adj[i].size() >= 2);
    }
  }
}

TEST_CASE("random_hierarchy") {
  Rng rng = make_rng(1);
  CHECK(canonical_form(random_hierarchy(2, rng)) == "(x1,x2)");
  CHECK_THROWS_AS(random_hierarchy(1, rng), HierarchyError);

  SUBCASE("three leaves are uniform") {
    std::map<std::string, int> freq;
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) ++freq[canonical_form(random_hierarchy(3, rng))];
    CHECK(freq.size() == 3);
    const double sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
    for (const auto& [form, c] : freq) CHECK(std::abs(c - draws / 3.0) <= 3 * sigma);
  }
  SUBCASE("four leaves are uniform over the enumeration") {
    std::set<std::string> all;
    for (const auto& h : enumerate(4)) all.insert(canonical_form(h));
    REQUIRE(all.size() == 15);
    std::map<std::string, int> freq;
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) ++freq[canonical_form(random_hierarchy(4, rng))];
    CHECK(freq.size() == 15);
    const double sigma = std::sqrt(draws * (1.0 / 15) * (14.0 / 15));
    for (const auto& [form, c] : freq) {
      CHECK(all.contains(form));
      CHECK(std::abs(c - draws / 15.0) <= 3 * sigma);
    }
  }
}

TEST_CASE("mutation keeps ids and invariants") {
  auto h = BinaryHierarchy::pair("a", "b");
  const NodeId a = h.leaf_of("a");
  const NodeId p = h.insert_sibling(a, "c");
  CHECK(h.leaf_of("a") == a);
  CHECK(h.parent(a) == p);
  CHECK(canonical_form(h) == "((a,c),b)");
  const NodeId top = h.insert_sibling(h.root(), "d");
  CHECK(h.root() == top);
  h.validate();
  CHECK(h.representative_label(h.root()) == "a");
  CHECK_THROWS_AS(h.insert_sibling(a, "b"), HierarchyError);

  const auto sub = nwk("(e,f);");
  h.graft_sibling(h.leaf_of("b"), sub);
  h.validate();
  CHECK(canonical_form(h) == "((((e,f),b),(a,c)),d)");
  CHECK(to_newick(h) == "(((a,c),(b,(e,f))),d);");
}

TEST_CASE("node table rebuild") {
  auto h = BinaryHierarchy::pair("a", "b");
  h.insert_sibling(h.leaf_of("a"), "c");  // new parent gets a larger id than the root
  std::vector<BinaryHierarchy::TableRow> rows;
  for (NodeId v = 0; v < h.node_count(); ++v) {
    rows.push_back(h.is_leaf(v) ? BinaryHierarchy::TableRow{h.label(v), {kNoNode, kNoNode}}
                                : BinaryHierarchy::TableRow{"", {h.left(v), h.right(v)}});
  }
  const auto back = BinaryHierarchy::from_table(rows, h.root());
  CHECK(to_newick(back) == to_newick(h));
  CHECK(back.representative_label(back.root()) == "a");

  rows[h.root()].children = {h.root(), 0};
  CHECK_THROWS_AS(BinaryHierarchy::from_table(rows, h.root()), HierarchyError);
  auto orphan = rows;
  orphan.push_back({"z", {kNoNode, kNoNode}});
  CHECK_THROWS_AS(BinaryHierarchy::from_table(orphan, h.root()), HierarchyError);
}

TEST_CASE("generators") {
  const auto l = default_labels(8);
  CHECK(canonical_form(caterpillar_hierarchy(std::span(l).first(4))) == "(((x1,x2),x3),x4)");
  CHECK(canonical_form(balanced_hierarchy(std::span(l).first(4))) == "((x1,x2),(x3,x4))");
  const auto b = balanced_hierarchy(l);
  for (const auto& e : l) CHECK(b.depth(b.leaf_of(e)) == 3);
  CHECK(tree_diameter(undirected(caterpillar_hierarchy(l))) == 8);
}
