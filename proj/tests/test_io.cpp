#include "doctest.h"
#include "hier/bruteforce.hpp"
#include "hier/io.hpp"

using namespace hier;

TEST_CASE("newick round trip") {
  for (const char* text : {"(a,b);", "(((a,b),c),d);", "((a,b),(c,d));", "x;", "((x1,x_2),(y.3,z-4));"}) {
    CHECK(to_newick(from_newick(text)) == text);
  }
  for (std::size_t n = 2; n <= 6; ++n) {
    for (const auto& h : enumerate(n)) {
      const auto back = from_newick(to_newick(h));
      CHECK(to_newick(back) == to_newick(h));
      CHECK(canonical_form(back) == canonical_form(h));
    }
  }
}

TEST_CASE("newick accepts whitespace") {
  CHECK(canonical_form(from_newick(" ( a , ( b,c ) ) ;\n")) == "((b,c),a)");
}

TEST_CASE("newick rejects malformed input") {
  for (const char* bad : {"(a,b)", "(a,b,c);", "(a);", "((a,b);", "(a,b));", "(a,b)x;", "(a:1,b);",
                          "(a,b);x", "(a b);", "(a,,b);", "(,a);", "();", ";", "", "(a,a);", "(a,#);"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(from_newick(bad), HierarchyError);
  }
}

TEST_CASE("newick refuses labels outside its alphabet") {
  CHECK(is_newick_label("lion_2.b-c"));
  CHECK_FALSE(is_newick_label("a b"));
  CHECK_FALSE(is_newick_label(""));
  CHECK_THROWS_AS(to_newick(BinaryHierarchy::pair("a b", "c")), HierarchyError);
}

TEST_CASE("json tree export") {
  const auto h = from_newick("((a,b),c);");
  const auto j = to_json_tree(h);
  CHECK(j["id"] == h.root());
  CHECK(j["label"].is_null());
  REQUIRE(j["children"].size() == 2);
  CHECK(j["children"][1]["label"] == "c");
  CHECK(j["children"][1]["children"].empty());
  CHECK(j["children"][0]["children"][0]["label"] == "a");
  CHECK(to_json_tree(BinaryHierarchy()).is_null());
}

TEST_CASE("state json keeps node ids") {
  auto h = from_newick("((a,b),(c,d));");
  h.insert_sibling(h.leaf_of("c"), "e");
  const auto back = from_state_json(to_state_json(h));
  CHECK(back.node_count() == h.node_count());
  CHECK(back.root() == h.root());
  for (NodeId v = 0; v < h.node_count(); ++v) {
    CHECK(back.parent(v) == h.parent(v));
    CHECK(back.label(v) == h.label(v));
  }
  auto broken = to_state_json(h);
  broken["nodes"][0] = {{"children", {5, 16}}};
  CHECK_THROWS_AS(from_state_json(broken), HierarchyError);
}
