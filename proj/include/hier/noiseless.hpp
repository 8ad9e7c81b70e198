#pragma once

// Exact-oracle reconstruction: QuickClustering with Merge, and
// InsertionClustering driven by the FindSibling search.

#include <cstddef>
#include <span>
#include <vector>

#include "hier/hierarchy.hpp"
#include "hier/oracles.hpp"
#include "hier/rng.hpp"

namespace hier {

struct Partition {
  std::vector<ElementId> a;
  std::vector<ElementId> b;
  std::vector<ElementId> c;
  ElementId pivot_a;
  ElementId pivot_b;
  std::size_t rounds_used = 1;
};

// One round: uniform distinct pivots, |els|-2 queries. Requires |els| >= 3.
Partition partition_round(std::span<const ElementId> els, OrdinalOracle& o, Rng& rng);
// The same split around given pivots.
Partition partition_around(std::span<const ElementId> els, const ElementId& pivot_a, const ElementId& pivot_b,
                           OrdinalOracle& o);

struct QuickStats {
  // Partition rounds per recursive call with at least three elements.
  std::vector<std::size_t> rounds_per_call;
  std::uint64_t partition_queries = 0;
  std::uint64_t merge_queries = 0;

  double mean_rounds() const;
};

BinaryHierarchy quick_clustering(std::span<const ElementId> els, OrdinalOracle& o, Rng& rng,
                                 QuickStats* stats = nullptr);

// Joins ta and tb under a new vertex and inserts it next to the vertex of tc
// found by walking down with pivot queries. tc may be empty.
BinaryHierarchy merge(const BinaryHierarchy& ta, const BinaryHierarchy& tb, const BinaryHierarchy& tc,
                      OrdinalOracle& o);

// Internal node minimising max(|T_L ∩ S|, |T_R ∩ S|, |rest ∩ S|); smallest id on
// ties. in_s is indexed by node id. Throws when |S| < 2.
NodeId separator(const BinaryHierarchy& h, const std::vector<char>& in_s);

// FindSibling as a resumable search: read pivot(), ask the pivot query for the
// element being placed, feed the direction to apply(), until done().
class SiblingSearch {
 public:
  explicit SiblingSearch(const BinaryHierarchy& h);

  bool done() const { return remaining_ == 1; }
  NodeId pivot() const;
  // Throws std::invalid_argument, changing nothing, when d would leave no
  // candidate (only possible with contradictory answers).
  void apply(PivotDirection d);
  NodeId result() const;

  std::size_t remaining() const { return remaining_; }
  const std::vector<char>& candidates() const { return in_s_; }
  std::size_t queries() const { return queries_; }

 private:
  const BinaryHierarchy* h_;
  std::vector<char> in_s_;
  std::size_t remaining_ = 0;
  std::size_t queries_ = 0;
  NodeId pivot_ = kNoNode;
};

NodeId find_sibling(const BinaryHierarchy& h, const ElementId& x, OrdinalOracle& o);

// Inserts els in the given order. per_insertion[i] receives the queries spent
// placing els[i] (zero for the first two).
BinaryHierarchy insertion_clustering(std::span<const ElementId> els, OrdinalOracle& o,
                                     std::vector<std::size_t>* per_insertion = nullptr);

}  // namespace hier
