#include "hier/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <string_view>
#include <unordered_set>

namespace hier {

namespace {

void require(bool ok, std::string_view message) {
  if (!ok) throw HierarchyError(std::string(message));
}

}  // namespace

// ---------------------------------------------------------------------------
// Triplet / TripletAnswer

Triplet::Triplet(ElementId a, ElementId b, ElementId c)
    : members_{std::move(a), std::move(b), std::move(c)} {
  for (const auto& m : members_) require(!m.empty(), "triplet member must be non-empty");
  require(members_[0] != members_[1] && members_[0] != members_[2] && members_[1] != members_[2],
          "triplet members must be distinct");
}

bool Triplet::contains(const ElementId& e) const {
  return std::find(members_.begin(), members_.end(), e) != members_.end();
}

std::array<ElementId, 3> Triplet::sorted() const {
  auto s = members_;
  std::sort(s.begin(), s.end());
  return s;
}

TripletAnswer::TripletAnswer(ElementId a, ElementId b) {
  require(!a.empty() && !b.empty(), "pair member must be non-empty");
  require(a != b, "pair members must be distinct");
  if (b < a) std::swap(a, b);
  first_ = std::move(a);
  second_ = std::move(b);
}

const ElementId& TripletAnswer::outsider(const Triplet& t) const {
  for (const auto& m : t.members()) {
    if (!contains(m)) return m;
  }
  throw HierarchyError("pair is not within the triplet");
}

std::array<TripletAnswer, 3> pairs_of(const Triplet& t) {
  const auto s = t.sorted();
  return {TripletAnswer(s[0], s[1]), TripletAnswer(s[0], s[2]), TripletAnswer(s[1], s[2])};
}

// ---------------------------------------------------------------------------
// BinaryHierarchy

BinaryHierarchy::BinaryHierarchy(ElementId single_leaf) {
  set_root(add_leaf(std::move(single_leaf)));
}

BinaryHierarchy BinaryHierarchy::pair(ElementId a, ElementId b) {
  BinaryHierarchy h;
  const NodeId x = h.add_leaf(std::move(a));
  const NodeId y = h.add_leaf(std::move(b));
  h.set_root(h.add_internal(x, y));
  return h;
}

BinaryHierarchy BinaryHierarchy::join(const BinaryHierarchy& left, const BinaryHierarchy& right) {
  require(!left.empty() && !right.empty(), "cannot join an empty hierarchy");
  BinaryHierarchy h;
  const NodeId a = h.copy_nodes_from(left);
  const NodeId b = h.copy_nodes_from(right);
  h.set_root(h.add_internal(a, b));
  return h;
}

BinaryHierarchy BinaryHierarchy::from_table(const std::vector<TableRow>& rows, NodeId root) {
  BinaryHierarchy h;
  h.nodes_.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TableRow& row = rows[i];
    const auto id = static_cast<NodeId>(i);
    Node& n = h.nodes_[i];
    if (row.children[0] == kNoNode && row.children[1] == kNoNode) {
      require(!row.label.empty(), "leaf without label");
      require(h.leaf_index_.emplace(row.label, id).second, "duplicate element label: " + row.label);
      n.label = row.label;
      n.rep = id;
      continue;
    }
    require(row.label.empty(), "internal node carries a label");
    for (NodeId c : row.children) {
      require(c < rows.size() && c != id, "unknown node");
      require(h.nodes_[c].parent == kNoNode, "child already has a parent");
      h.nodes_[c].parent = id;
    }
    n.children = row.children;
  }
  require(root < rows.size(), "unknown node");
  h.set_root(root);
  // Representatives bottom-up; postorder() needs a well-formed tree, so check
  // reachability first.
  std::vector<char> seen(rows.size(), 0);
  std::vector<NodeId> stack{root};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    require(!seen[v], "cycle or shared child");
    seen[v] = 1;
    if (!h.is_leaf(v)) {
      stack.push_back(h.left(v));
      stack.push_back(h.right(v));
    }
  }
  require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }), "unreachable nodes in table");
  for (NodeId v : h.postorder()) {
    if (h.is_leaf(v)) continue;
    Node& n = h.nodes_[v];
    const NodeId rl = h.nodes_[n.children[0]].rep;
    const NodeId rr = h.nodes_[n.children[1]].rep;
    n.rep = h.nodes_[rr].label < h.nodes_[rl].label ? rr : rl;
  }
  h.validate();
  return h;
}

NodeId BinaryHierarchy::add_leaf(ElementId label) {
  require(!label.empty(), "element label must be non-empty");
  require(!leaf_index_.contains(label), "duplicate element label: " + label);
  const auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.label = label;
  n.rep = id;
  nodes_.push_back(std::move(n));
  leaf_index_.emplace(std::move(label), id);
  return id;
}

NodeId BinaryHierarchy::add_internal(NodeId left, NodeId right) {
  require(left < nodes_.size() && right < nodes_.size(), "unknown node");
  require(left != right, "children must be distinct");
  require(nodes_[left].parent == kNoNode && nodes_[right].parent == kNoNode,
          "child already has a parent");
  require(left != root_ && right != root_, "the root cannot become a child");
  const auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.children = {left, right};
  const NodeId rl = nodes_[left].rep;
  const NodeId rr = nodes_[right].rep;
  n.rep = nodes_[rr].label < nodes_[rl].label ? rr : rl;
  nodes_.push_back(std::move(n));
  nodes_[left].parent = id;
  nodes_[right].parent = id;
  return id;
}

void BinaryHierarchy::set_root(NodeId v) {
  require(v < nodes_.size(), "unknown node");
  require(nodes_[v].parent == kNoNode, "root must not have a parent");
  root_ = v;
}

void BinaryHierarchy::refresh_upwards(NodeId v) {
  while (v != kNoNode) {
    Node& n = nodes_[v];
    const NodeId rl = nodes_[n.children[0]].rep;
    const NodeId rr = nodes_[n.children[1]].rep;
    const NodeId rep = nodes_[rr].label < nodes_[rl].label ? rr : rl;
    if (rep == n.rep) break;
    n.rep = rep;
    v = n.parent;
  }
}

NodeId BinaryHierarchy::splice_above(NodeId v, NodeId other) {
  const NodeId old_parent = nodes_[v].parent;
  nodes_[v].parent = kNoNode;
  const bool was_root = v == root_;
  if (was_root) root_ = kNoNode;
  const NodeId p = add_internal(v, other);
  nodes_[p].parent = old_parent;
  if (was_root) {
    root_ = p;
  } else {
    auto& siblings = nodes_[old_parent].children;
    (siblings[0] == v ? siblings[0] : siblings[1]) = p;
    refresh_upwards(old_parent);
  }
  return p;
}

NodeId BinaryHierarchy::insert_sibling(NodeId v, ElementId label) {
  require(v < nodes_.size(), "unknown node");
  const NodeId leaf = add_leaf(std::move(label));
  return splice_above(v, leaf);
}

NodeId BinaryHierarchy::graft_sibling(NodeId v, const BinaryHierarchy& sub) {
  require(v < nodes_.size(), "unknown node");
  const NodeId r = copy_nodes_from(sub);
  return splice_above(v, r);
}

NodeId BinaryHierarchy::copy_nodes_from(const BinaryHierarchy& sub) {
  require(!sub.empty(), "cannot copy an empty hierarchy");
  for (const auto& [label, _] : sub.leaf_index_) {
    require(!leaf_index_.contains(label), "duplicate element label: " + label);
  }
  const auto offset = static_cast<NodeId>(nodes_.size());
  auto shift = [offset](NodeId v) { return v == kNoNode ? kNoNode : v + offset; };
  for (const Node& n : sub.nodes_) {
    Node c = n;
    c.parent = shift(n.parent);
    c.children = {shift(n.children[0]), shift(n.children[1])};
    c.rep = shift(n.rep);
    nodes_.push_back(std::move(c));
  }
  for (const auto& [label, id] : sub.leaf_index_) leaf_index_.emplace(label, id + offset);
  return sub.root_ + offset;
}

std::optional<NodeId> BinaryHierarchy::find_leaf(const ElementId& e) const {
  const auto it = leaf_index_.find(e);
  if (it == leaf_index_.end()) return std::nullopt;
  return it->second;
}

NodeId BinaryHierarchy::leaf_of(const ElementId& e) const {
  const auto it = leaf_index_.find(e);
  require(it != leaf_index_.end(), "unknown element: " + e);
  return it->second;
}

std::vector<NodeId> BinaryHierarchy::preorder() const {
  std::vector<NodeId> out;
  if (empty()) return out;
  out.reserve(nodes_.size());
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    out.push_back(v);
    if (!is_leaf(v)) {
      stack.push_back(right(v));
      stack.push_back(left(v));
    }
  }
  return out;
}

std::vector<NodeId> BinaryHierarchy::postorder() const {
  // Reverse of a root-right-left preorder.
  std::vector<NodeId> out;
  if (empty()) return out;
  out.reserve(nodes_.size());
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    out.push_back(v);
    if (!is_leaf(v)) {
      stack.push_back(left(v));
      stack.push_back(right(v));
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<ElementId> BinaryHierarchy::elements() const {
  std::vector<ElementId> out;
  for (NodeId v : preorder()) {
    if (is_leaf(v)) out.push_back(label(v));
  }
  return out;
}

std::vector<ElementId> BinaryHierarchy::cluster(NodeId v) const {
  std::vector<ElementId> out;
  std::vector<NodeId> stack{v};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    if (is_leaf(u)) {
      out.push_back(label(u));
    } else {
      stack.push_back(right(u));
      stack.push_back(left(u));
    }
  }
  return out;
}

std::vector<NodeId> BinaryHierarchy::neighbors(NodeId v) const {
  std::vector<NodeId> out;
  if (parent(v) != kNoNode) out.push_back(parent(v));
  if (!is_leaf(v)) {
    out.push_back(left(v));
    out.push_back(right(v));
  }
  return out;
}

bool BinaryHierarchy::in_subtree(NodeId v, NodeId top) const {
  for (NodeId u = v; u != kNoNode; u = parent(u)) {
    if (u == top) return true;
  }
  return false;
}

std::size_t BinaryHierarchy::depth(NodeId v) const {
  std::size_t d = 0;
  for (NodeId u = parent(v); u != kNoNode; u = parent(u)) ++d;
  return d;
}

void BinaryHierarchy::validate() const {
  if (root_ == kNoNode) {
    require(nodes_.empty(), "hierarchy has nodes but no root");
    return;
  }
  require(nodes_[root_].parent == kNoNode, "root has a parent");
  std::vector<char> seen(nodes_.size(), 0);
  std::size_t leaves = 0;
  std::size_t internal = 0;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    require(v < nodes_.size(), "dangling node reference");
    require(!seen[v], "cycle or shared child");
    seen[v] = 1;
    const Node& n = nodes_[v];
    const bool no_left = n.children[0] == kNoNode;
    const bool no_right = n.children[1] == kNoNode;
    require(no_left == no_right, "internal node with one child");
    if (no_left) {
      ++leaves;
      require(!n.label.empty(), "leaf without label");
      const auto it = leaf_index_.find(n.label);
      require(it != leaf_index_.end() && it->second == v, "leaf index out of sync");
      require(n.rep == v, "stale representative");
    } else {
      ++internal;
      require(n.label.empty(), "internal node carries a label");
      for (NodeId c : n.children) {
        require(c < nodes_.size() && nodes_[c].parent == v, "parent link out of sync");
        stack.push_back(c);
      }
      const NodeId rl = nodes_[n.children[0]].rep;
      const NodeId rr = nodes_[n.children[1]].rep;
      require(n.rep == (nodes_[rr].label < nodes_[rl].label ? rr : rl), "stale representative");
    }
  }
  require(leaves + internal == nodes_.size(), "unreachable nodes in table");
  require(leaves == leaf_index_.size(), "leaf index out of sync");
  require(internal + 1 == leaves, "binary tree must have n-1 internal nodes");
}

// ---------------------------------------------------------------------------
// LCA

LcaIndex::LcaIndex(const BinaryHierarchy& h) : h_(&h) {
  require(!h.empty(), "empty hierarchy");
  const std::size_t n = h.node_count();
  depth_.assign(n, 0);
  first_.assign(n, 0);
  euler_.reserve(2 * n);
  // Iterative Euler tour: (node, next child slot).
  std::vector<std::pair<NodeId, int>> stack{{h.root(), 0}};
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    if (slot == 0) first_[v] = euler_.size();
    euler_.push_back(v);
    if (h.is_leaf(v) || slot == 2) {
      stack.pop_back();
      continue;
    }
    const NodeId c = h.child(v, static_cast<std::size_t>(slot));
    ++slot;
    depth_[c] = depth_[v] + 1;
    stack.emplace_back(c, 0);
  }
  const std::size_t m = euler_.size();
  const std::size_t levels = std::bit_width(m);
  sparse_.assign(levels, std::vector<std::uint32_t>(m));
  for (std::size_t i = 0; i < m; ++i) sparse_[0][i] = static_cast<std::uint32_t>(i);
  for (std::size_t k = 1; k < levels; ++k) {
    const std::size_t half = std::size_t{1} << (k - 1);
    for (std::size_t i = 0; i + (std::size_t{1} << k) <= m; ++i) {
      const auto a = sparse_[k - 1][i];
      const auto b = sparse_[k - 1][i + half];
      sparse_[k][i] = depth_[euler_[b]] < depth_[euler_[a]] ? b : a;
    }
  }
}

NodeId LcaIndex::lca(NodeId a, NodeId b) const {
  std::size_t l = first_[a];
  std::size_t r = first_[b];
  if (l > r) std::swap(l, r);
  const std::size_t k = std::bit_width(r - l + 1) - 1;
  const auto x = sparse_[k][l];
  const auto y = sparse_[k][r + 1 - (std::size_t{1} << k)];
  return euler_[depth_[euler_[y]] < depth_[euler_[x]] ? y : x];
}

namespace {

TripletAnswer deepest_pair(const Triplet& t, const std::array<std::size_t, 3>& pair_depth) {
  // pair_depth[i] is the LCA depth of the pair that excludes member i.
  const auto& m = t.members();
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t j = (i + 1) % 3;
    const std::size_t k = (i + 2) % 3;
    if (pair_depth[i] > pair_depth[j] && pair_depth[i] > pair_depth[k]) {
      return TripletAnswer(m[j], m[k]);
    }
  }
  throw HierarchyError("triplet has no unique closest pair; tree is not binary");
}

}  // namespace

TripletAnswer LcaIndex::answer(const Triplet& t) const {
  std::array<NodeId, 3> leaf{};
  for (std::size_t i = 0; i < 3; ++i) leaf[i] = h_->leaf_of(t[i]);
  return deepest_pair(t, {depth_[lca(leaf[1], leaf[2])], depth_[lca(leaf[0], leaf[2])],
                          depth_[lca(leaf[0], leaf[1])]});
}

TripletAnswer triplet_answer(const BinaryHierarchy& h, const Triplet& t) {
  std::array<NodeId, 3> leaf{};
  std::array<std::size_t, 3> depth{};
  for (std::size_t i = 0; i < 3; ++i) {
    leaf[i] = h.leaf_of(t[i]);
    depth[i] = h.depth(leaf[i]);
  }
  auto lca_depth = [&](std::size_t i, std::size_t j) {
    NodeId a = leaf[i];
    NodeId b = leaf[j];
    std::size_t da = depth[i];
    std::size_t db = depth[j];
    for (; da > db; --da) a = h.parent(a);
    for (; db > da; --db) b = h.parent(b);
    while (a != b) {
      a = h.parent(a);
      b = h.parent(b);
      --da;
    }
    return da;
  };
  return deepest_pair(t, {lca_depth(1, 2), lca_depth(0, 2), lca_depth(0, 1)});
}

// ---------------------------------------------------------------------------
// Equivalence

std::string canonical_form(const BinaryHierarchy& h) {
  if (h.empty()) return {};
  std::vector<std::string> form(h.node_count());
  for (NodeId v : h.postorder()) {
    if (h.is_leaf(v)) {
      form[v] = h.label(v);
      continue;
    }
    std::string& a = form[h.left(v)];
    std::string& b = form[h.right(v)];
    if (b < a) std::swap(a, b);
    form[v].reserve(a.size() + b.size() + 3);
    form[v] += '(';
    form[v] += a;
    form[v] += ',';
    form[v] += b;
    form[v] += ')';
    a.clear();
    b.clear();
  }
  return std::move(form[h.root()]);
}

bool equivalent(const BinaryHierarchy& a, const BinaryHierarchy& b) {
  auto ea = a.elements();
  auto eb = b.elements();
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  require(ea == eb, "hierarchies have different leaf sets");
  return canonical_form(a) == canonical_form(b);
}

// ---------------------------------------------------------------------------
// Laminar families

LaminarFamily to_laminar(const BinaryHierarchy& h) {
  LaminarFamily family;
  if (h.empty()) return family;
  std::vector<Cluster> clusters(h.node_count());
  for (NodeId v : h.postorder()) {
    if (h.is_leaf(v)) {
      clusters[v] = {h.label(v)};
    } else {
      clusters[v] = clusters[h.left(v)];
      clusters[v].insert(clusters[h.right(v)].begin(), clusters[h.right(v)].end());
    }
    family.insert(clusters[v]);
  }
  return family;
}

namespace {

bool subset_of(const Cluster& a, const Cluster& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool disjoint(const Cluster& a, const Cluster& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return false;
    }
  }
  return true;
}

}  // namespace

BinaryHierarchy from_laminar(const LaminarFamily& family) {
  require(!family.empty(), "empty family");
  Cluster universe;
  for (const auto& c : family) {
    require(!c.empty(), "family contains the empty set");
    universe.insert(c.begin(), c.end());
  }
  require(family.contains(universe), "family must contain the ground set");
  for (const auto& e : universe) require(family.contains(Cluster{e}), "missing singleton {" + e + "}");
  const std::vector<Cluster> members(family.begin(), family.end());
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const auto& a = members[i];
      const auto& b = members[j];
      require(disjoint(a, b) || subset_of(a, b) || subset_of(b, a), "family is not laminar");
    }
  }

  BinaryHierarchy h;
  // Increasing size, so both children exist before their parent.
  std::vector<std::size_t> order(members.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return members[a].size() < members[b].size(); });
  std::vector<NodeId> built(members.size(), kNoNode);
  for (std::size_t idx : order) {
    const Cluster& c = members[idx];
    if (c.size() == 1) {
      built[idx] = h.add_leaf(*c.begin());
      continue;
    }
    // Maximal proper subsets of c.
    std::vector<std::size_t> maximal;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const Cluster& d = members[j];
      if (d.size() >= c.size() || !subset_of(d, c)) continue;
      bool dominated = false;
      for (std::size_t k = 0; k < members.size() && !dominated; ++k) {
        const Cluster& e = members[k];
        dominated = k != j && e.size() < c.size() && e.size() > d.size() && subset_of(d, e) &&
                    subset_of(e, c);
      }
      if (!dominated) maximal.push_back(j);
    }
    require(maximal.size() == 2, "family is not binary: cluster has " +
                                     std::to_string(maximal.size()) + " maximal subclusters");
    require(members[maximal[0]].size() + members[maximal[1]].size() == c.size(),
            "family is not binary: subclusters do not cover their parent");
    built[idx] = h.add_internal(built[maximal[0]], built[maximal[1]]);
  }
  const auto root_idx = static_cast<std::size_t>(
      std::distance(members.begin(), std::find(members.begin(), members.end(), universe)));
  h.set_root(built[root_idx]);
  h.validate();
  return h;
}

// ---------------------------------------------------------------------------
// Induced and contracted trees

BinaryHierarchy induced_tree(const BinaryHierarchy& h, std::span<const ElementId> subset) {
  std::unordered_set<ElementId> keep(subset.begin(), subset.end());
  require(keep.size() >= 2, "induced tree needs at least two elements");
  for (const auto& e : keep) h.leaf_of(e);
  BinaryHierarchy out;
  std::vector<NodeId> image(h.node_count(), kNoNode);
  for (NodeId v : h.postorder()) {
    if (h.is_leaf(v)) {
      if (keep.contains(h.label(v))) image[v] = out.add_leaf(h.label(v));
      continue;
    }
    const NodeId l = image[h.left(v)];
    const NodeId r = image[h.right(v)];
    if (l != kNoNode && r != kNoNode) {
      image[v] = out.add_internal(l, r);
    } else {
      image[v] = l != kNoNode ? l : r;
    }
  }
  out.set_root(image[h.root()]);
  return out;
}

std::optional<std::size_t> ContractedTree::index_of(NodeId v) const {
  const auto it = std::find(nodes.begin(), nodes.end(), v);
  if (it == nodes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

Adjacency ContractedTree::adjacency() const {
  Adjacency adj(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const Edge& e : edges[i]) adj[i].push_back(e.to);
  }
  return adj;
}

ContractedTree contracted_tree(const BinaryHierarchy& h, std::span<const NodeId> vertices) {
  require(!vertices.empty(), "contracted tree needs at least one vertex");
  std::vector<char> candidate(h.node_count(), 0);
  for (NodeId v : vertices) {
    require(v < h.node_count(), "unknown node");
    candidate[v] = 1;
  }
  std::vector<std::size_t> count(h.node_count(), 0);
  for (NodeId v : h.postorder()) {
    count[v] = candidate[v];
    if (!h.is_leaf(v)) count[v] += count[h.left(v)] + count[h.right(v)];
  }
  auto kept = [&](NodeId v) {
    return candidate[v] || (!h.is_leaf(v) && count[h.left(v)] > 0 && count[h.right(v)] > 0);
  };

  ContractedTree tree;
  std::vector<std::size_t> index(h.node_count(), SIZE_MAX);
  for (NodeId v : h.preorder()) {
    if (count[v] == 0 || !kept(v)) continue;
    index[v] = tree.nodes.size();
    tree.nodes.push_back(v);
  }
  tree.edges.resize(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const NodeId v = tree.nodes[i];
    NodeId prev = v;
    NodeId cur = h.parent(v);
    while (cur != kNoNode && index[cur] == SIZE_MAX) {
      prev = cur;
      cur = h.parent(cur);
    }
    if (cur == kNoNode) continue;  // topmost kept node
    const std::size_t j = index[cur];
    tree.edges[i].push_back({j, h.parent(v)});
    tree.edges[j].push_back({i, prev});
  }
  return tree;
}

Adjacency undirected(const BinaryHierarchy& h) {
  Adjacency adj(h.node_count());
  for (NodeId v = 0; v < h.node_count(); ++v) {
    for (NodeId u : h.neighbors(v)) adj[v].push_back(u);
  }
  return adj;
}

std::vector<std::size_t> bfs_distances(const Adjacency& adj, std::size_t source) {
  std::vector<std::size_t> dist(adj.size(), SIZE_MAX);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t u : adj[v]) {
      if (dist[u] != SIZE_MAX) continue;
      dist[u] = dist[v] + 1;
      queue.push_back(u);
    }
  }
  return dist;
}

std::size_t tree_diameter(const Adjacency& adj) {
  if (adj.empty()) return 0;
  auto farthest = [&](std::size_t from) {
    const auto d = bfs_distances(adj, from);
    std::size_t best = from;
    for (std::size_t v = 0; v < d.size(); ++v) {
      if (d[v] != SIZE_MAX && d[v] > d[best]) best = v;
    }
    return std::pair{best, d[best]};
  };
  return farthest(farthest(0).first).second;
}

// ---------------------------------------------------------------------------
// Generators

std::vector<ElementId> default_labels(std::size_t n) {
  std::vector<ElementId> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

BinaryHierarchy random_hierarchy(std::span<const ElementId> labels, Rng& rng) {
  require(labels.size() >= 2, "random hierarchy needs n >= 2");
  auto h = BinaryHierarchy::pair(labels[0], labels[1]);
  for (std::size_t i = 2; i < labels.size(); ++i) {
    const auto v = static_cast<NodeId>(uniform_index(rng, h.node_count()));
    h.insert_sibling(v, labels[i]);
  }
  return h;
}

BinaryHierarchy random_hierarchy(std::size_t n, Rng& rng) {
  const auto labels = default_labels(n);
  return random_hierarchy(labels, rng);
}

BinaryHierarchy caterpillar_hierarchy(std::span<const ElementId> labels) {
  require(!labels.empty(), "hierarchy needs at least one element");
  BinaryHierarchy h(labels[0]);
  for (std::size_t i = 1; i < labels.size(); ++i) h.insert_sibling(h.root(), labels[i]);
  return h;
}

BinaryHierarchy balanced_hierarchy(std::span<const ElementId> labels) {
  require(!labels.empty(), "hierarchy needs at least one element");
  BinaryHierarchy h;
  struct Frame {
    std::size_t begin, end;
    NodeId left = kNoNode;
    int stage = 0;
  };
  std::vector<Frame> stack{{0, labels.size()}};
  NodeId last = kNoNode;
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.end - f.begin == 1) {
      last = h.add_leaf(labels[f.begin]);
      stack.pop_back();
      continue;
    }
    const std::size_t mid = f.begin + (f.end - f.begin) / 2;
    if (f.stage == 0) {
      f.stage = 1;
      stack.push_back({f.begin, mid});
    } else if (f.stage == 1) {
      f.left = last;
      f.stage = 2;
      stack.push_back({mid, f.end});
    } else {
      last = h.add_internal(f.left, last);
      stack.pop_back();
    }
  }
  h.set_root(last);
  return h;
}

}  // namespace hier
