#pragma once

// Rooted binary hierarchies over labelled elements: the node table, triplet
// ground truth, equivalence, laminar families and induced/contracted trees.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hier/rng.hpp"

namespace hier {

using ElementId = std::string;
using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// Undirected tree as adjacency lists over 0..size-1.
using Adjacency = std::vector<std::vector<std::size_t>>;

class HierarchyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Three distinct elements. Member order is kept as given; equality and
// hashing never depend on it.
class Triplet {
 public:
  Triplet(ElementId a, ElementId b, ElementId c);

  const std::array<ElementId, 3>& members() const { return members_; }
  const ElementId& operator[](std::size_t i) const { return members_[i]; }
  bool contains(const ElementId& e) const;
  // Members in lexicographic order; the canonical key of the triplet.
  std::array<ElementId, 3> sorted() const;

  friend bool operator==(const Triplet& a, const Triplet& b) {
    return a.sorted() == b.sorted();
  }

 private:
  std::array<ElementId, 3> members_;
};

// Unordered pair, stored with first < second.
class TripletAnswer {
 public:
  TripletAnswer(ElementId a, ElementId b);

  const ElementId& first() const { return first_; }
  const ElementId& second() const { return second_; }
  bool contains(const ElementId& e) const { return e == first_ || e == second_; }
  bool within(const Triplet& t) const { return t.contains(first_) && t.contains(second_); }
  // The member of t that is not in the pair.
  const ElementId& outsider(const Triplet& t) const;

  friend bool operator==(const TripletAnswer&, const TripletAnswer&) = default;
  friend auto operator<=>(const TripletAnswer&, const TripletAnswer&) = default;

 private:
  ElementId first_;
  ElementId second_;
};

// The three pairs of a triplet, in lexicographic order.
std::array<TripletAnswer, 3> pairs_of(const Triplet& t);

class BinaryHierarchy {
 public:
  BinaryHierarchy() = default;
  explicit BinaryHierarchy(ElementId single_leaf);

  static BinaryHierarchy pair(ElementId a, ElementId b);
  // New root whose children are copies of the two roots.
  static BinaryHierarchy join(const BinaryHierarchy& left, const BinaryHierarchy& right);

  // One row of an exact node table: a label for leaves, two children otherwise.
  struct TableRow {
    ElementId label;
    std::array<NodeId, 2> children{kNoNode, kNoNode};
  };
  // Rebuilds a hierarchy with the given ids. Children may have any ids.
  static BinaryHierarchy from_table(const std::vector<TableRow>& rows, NodeId root);

  // Low-level construction. The caller must finish with set_root() on a node
  // whose subtree covers every node added; validate() checks this.
  NodeId add_leaf(ElementId label);
  NodeId add_internal(NodeId left, NodeId right);
  void set_root(NodeId v);

  // Splices a new parent above v whose other child is a new leaf. v may be
  // the root. Returns the new parent; existing node ids are unchanged.
  NodeId insert_sibling(NodeId v, ElementId label);
  // Same, with a copy of `sub` in place of the new leaf.
  NodeId graft_sibling(NodeId v, const BinaryHierarchy& sub);
  // Copies `sub` into this table without attaching it; returns its root.
  NodeId copy_nodes_from(const BinaryHierarchy& sub);

  bool empty() const { return root_ == kNoNode; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_index_.size(); }
  NodeId root() const { return root_; }

  NodeId parent(NodeId v) const { return node(v).parent; }
  NodeId left(NodeId v) const { return node(v).children[0]; }
  NodeId right(NodeId v) const { return node(v).children[1]; }
  NodeId child(NodeId v, std::size_t side) const { return node(v).children[side]; }
  bool is_leaf(NodeId v) const { return node(v).children[0] == kNoNode; }
  bool is_root(NodeId v) const { return v == root_; }
  const ElementId& label(NodeId v) const { return node(v).label; }

  // Leaf with the smallest label in the subtree of v.
  NodeId representative(NodeId v) const { return node(v).rep; }
  const ElementId& representative_label(NodeId v) const { return label(node(v).rep); }

  bool contains(const ElementId& e) const { return leaf_index_.contains(e); }
  std::optional<NodeId> find_leaf(const ElementId& e) const;
  // Throws HierarchyError for unknown elements.
  NodeId leaf_of(const ElementId& e) const;

  // Leaf labels in left-to-right order.
  std::vector<ElementId> elements() const;
  std::vector<ElementId> cluster(NodeId v) const;
  std::vector<NodeId> preorder() const;
  std::vector<NodeId> postorder() const;
  std::vector<NodeId> neighbors(NodeId v) const;
  // True iff v lies in the subtree rooted at top.
  bool in_subtree(NodeId v, NodeId top) const;
  std::size_t depth(NodeId v) const;

  // Throws HierarchyError when an invariant is broken.
  void validate() const;

 private:
  struct Node {
    NodeId parent = kNoNode;
    std::array<NodeId, 2> children{kNoNode, kNoNode};
    ElementId label;
    NodeId rep = kNoNode;
  };

  const Node& node(NodeId v) const { return nodes_.at(v); }
  void refresh_upwards(NodeId v);
  NodeId splice_above(NodeId v, NodeId other);

  std::vector<Node> nodes_;
  NodeId root_ = kNoNode;
  std::unordered_map<ElementId, NodeId> leaf_index_;
};

// Constant-time LCA over a fixed hierarchy (Euler tour + sparse table).
class LcaIndex {
 public:
  explicit LcaIndex(const BinaryHierarchy& h);

  NodeId lca(NodeId a, NodeId b) const;
  std::size_t depth(NodeId v) const { return depth_[v]; }
  TripletAnswer answer(const Triplet& t) const;

 private:
  const BinaryHierarchy* h_;
  std::vector<std::size_t> depth_;
  std::vector<std::size_t> first_;
  std::vector<NodeId> euler_;
  std::vector<std::vector<std::uint32_t>> sparse_;
};

// The pair whose LCA is strictly deeper than the other two.
TripletAnswer triplet_answer(const BinaryHierarchy& h, const Triplet& t);

// Same cluster family; child order is immaterial. Throws on different leaf sets.
bool equivalent(const BinaryHierarchy& a, const BinaryHierarchy& b);

// Leaf -> label; internal -> "(" + sorted child forms joined by "," + ")".
std::string canonical_form(const BinaryHierarchy& h);

using Cluster = std::set<ElementId>;
using LaminarFamily = std::set<Cluster>;

LaminarFamily to_laminar(const BinaryHierarchy& h);
// Throws HierarchyError for non-laminar or non-binary families.
BinaryHierarchy from_laminar(const LaminarFamily& family);

// Leaf deletion followed by contraction of single-child nodes.
BinaryHierarchy induced_tree(const BinaryHierarchy& h, std::span<const ElementId> subset);

// Tree over a set of real nodes of h: the candidates plus every node where
// their minimal spanning subtree branches, joined along h-paths.
struct ContractedTree {
  struct Edge {
    std::size_t to;
    NodeId first_step;  // h-neighbour of the source node on the path to `to`
  };

  std::vector<NodeId> nodes;
  std::vector<std::vector<Edge>> edges;

  std::size_t size() const { return nodes.size(); }
  std::optional<std::size_t> index_of(NodeId v) const;
  Adjacency adjacency() const;
};

ContractedTree contracted_tree(const BinaryHierarchy& h, std::span<const NodeId> vertices);

// h as an undirected tree over its node ids.
Adjacency undirected(const BinaryHierarchy& h);
std::vector<std::size_t> bfs_distances(const Adjacency& adj, std::size_t source);
std::size_t tree_diameter(const Adjacency& adj);

// Labels x1..xn.
std::vector<ElementId> default_labels(std::size_t n);

// Uniform over the (2n-3)!! labelled topologies: each new leaf subdivides a
// uniformly chosen edge, the edge above the root included.
BinaryHierarchy random_hierarchy(std::span<const ElementId> labels, Rng& rng);
BinaryHierarchy random_hierarchy(std::size_t n, Rng& rng);
// (((x1,x2),x3),...,xn)
BinaryHierarchy caterpillar_hierarchy(std::span<const ElementId> labels);
// Halves split recursively; a full binary tree when n is a power of two.
BinaryHierarchy balanced_hierarchy(std::span<const ElementId> labels);

}  // namespace hier
