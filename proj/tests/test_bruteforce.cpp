#include <set>

#include "doctest.h"
#include "hier/bruteforce.hpp"
#include "hier/io.hpp"

using namespace hier;

TEST_CASE("topology counts") {
  const std::uint64_t expect[] = {0, 0, 1, 3, 15, 105, 945, 10395};
  for (std::size_t n = 2; n <= 7; ++n) {
    CHECK(topology_count(n) == expect[n]);
    const auto all = enumerate(n);
    CHECK(all.size() == expect[n]);
    std::set<std::string> forms;
    for (const auto& h : all) {
      h.validate();
      CHECK(h.leaf_count() == n);
      forms.insert(canonical_form(h));
    }
    CHECK(forms.size() == all.size());
  }
  CHECK_THROWS_AS(enumerate(1), std::invalid_argument);
  CHECK_THROWS_AS(enumerate(9), std::invalid_argument);
}

TEST_CASE("the answer table pins down the topology") {
  for (std::size_t n = 3; n <= 6; ++n) {
    for (const auto& truth : enumerate(n)) {
      const auto els = truth.elements();
      const auto found = consistent_with(answer_table(truth), els);
      REQUIRE(found.size() == 1);
      CHECK(canonical_form(found.front()) == canonical_form(truth));
    }
  }
}

TEST_CASE("a flipped answer leaves no consistent topology") {
  const auto truth = from_newick("(((a,b),c),d);");
  auto table = answer_table(truth);
  CHECK(consistent_with(table, truth.elements()).size() == 1);
  // {b,c} for abc is still realised by ((a,(b,c)),d).
  table.at({"a", "b", "c"}) = TripletAnswer("b", "c");
  CHECK(consistent_with(table, truth.elements()).size() == 1);
  table = answer_table(truth);
  table.at({"a", "b", "d"}) = TripletAnswer("b", "d");
  CHECK(consistent_with(table, truth.elements()).empty());
  table.erase({"a", "b", "d"});
  CHECK_THROWS_AS(consistent_with(table, truth.elements()), std::invalid_argument);
}

TEST_CASE("exhaustive reconstruction") {
  const auto truth4 = from_newick("((a,b),(c,d));");
  ExactOracle o4(truth4);
  CHECK(equivalent(reconstruct_exhaustive(o4, truth4.elements()), truth4));
  CHECK(o4.queries_used() == 4);

  Rng rng = make_rng(1);
  const auto truth7 = random_hierarchy(7, rng);
  ExactOracle o7(truth7);
  CHECK(equivalent(reconstruct_exhaustive(o7, truth7.elements()), truth7));
  CHECK(o7.queries_used() == 35);

  FunctionOracle liar([&](const Triplet& t) {
    const auto s = t.sorted();
    return s == std::array<ElementId, 3>{"a", "b", "c"} ? TripletAnswer("a", "c") : triplet_answer(truth4, t);
  });
  CHECK_THROWS_AS(reconstruct_exhaustive(liar, truth4.elements()), std::runtime_error);

  for (std::size_t n = 3; n <= 5; ++n) {
    for (const auto& truth : enumerate(n)) {
      ExactOracle o(truth);
      CHECK(canonical_form(reconstruct_exhaustive(o, truth.elements())) == canonical_form(truth));
    }
  }
}
