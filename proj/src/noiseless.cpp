#include "hier/noiseless.hpp"

#include <algorithm>
#include <numeric>

namespace hier {

namespace {

void mark_subtree(const BinaryHierarchy& h, NodeId top, std::vector<char>& mark) {
  std::vector<NodeId> stack{top};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    mark[v] = 1;
    if (!h.is_leaf(v)) {
      stack.push_back(h.left(v));
      stack.push_back(h.right(v));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// QuickClustering

Partition partition_around(std::span<const ElementId> els, const ElementId& pivot_a, const ElementId& pivot_b,
                           OrdinalOracle& o) {
  if (els.size() < 3) throw std::invalid_argument("partition needs at least three elements");
  if (pivot_a == pivot_b) throw std::invalid_argument("pivots must differ");
  Partition part;
  part.pivot_a = pivot_a;
  part.pivot_b = pivot_b;
  part.a.push_back(pivot_a);
  part.b.push_back(pivot_b);
  std::size_t seen = 0;
  for (const ElementId& x : els) {
    if (x == pivot_a || x == pivot_b) {
      ++seen;
      continue;
    }
    const TripletAnswer ans = o.answer(Triplet(pivot_a, pivot_b, x));
    if (ans == TripletAnswer(pivot_a, x)) {
      part.a.push_back(x);
    } else if (ans == TripletAnswer(pivot_b, x)) {
      part.b.push_back(x);
    } else {
      part.c.push_back(x);
    }
  }
  if (seen != 2) throw std::invalid_argument("pivots must be elements of the set");
  return part;
}

Partition partition_round(std::span<const ElementId> els, OrdinalOracle& o, Rng& rng) {
  if (els.size() < 3) throw std::invalid_argument("partition needs at least three elements");
  const std::size_t i = uniform_index(rng, els.size());
  std::size_t j = uniform_index(rng, els.size() - 1);
  if (j >= i) ++j;
  return partition_around(els, els[i], els[j], o);
}

double QuickStats::mean_rounds() const {
  if (rounds_per_call.empty()) return 0.0;
  const double sum = std::accumulate(rounds_per_call.begin(), rounds_per_call.end(), 0.0);
  return sum / static_cast<double>(rounds_per_call.size());
}

BinaryHierarchy quick_clustering(std::span<const ElementId> els, OrdinalOracle& o, Rng& rng,
                                 QuickStats* stats) {
  if (els.empty()) throw std::invalid_argument("quick_clustering needs at least one element");
  if (els.size() == 1) return BinaryHierarchy(els[0]);
  if (els.size() == 2) return BinaryHierarchy::pair(els[0], els[1]);

  const std::size_t n = els.size();
  Partition part;
  std::size_t rounds = 0;
  while (true) {
    part = partition_round(els, o, rng);
    ++rounds;
    const std::size_t largest = std::max({part.a.size(), part.b.size(), part.c.size()});
    if (16 * largest <= 15 * n) break;
  }
  part.rounds_used = rounds;
  if (stats) {
    stats->rounds_per_call.push_back(rounds);
    stats->partition_queries += rounds * (n - 2);
  }

  const BinaryHierarchy ta = quick_clustering(part.a, o, rng, stats);
  const BinaryHierarchy tb = quick_clustering(part.b, o, rng, stats);
  const BinaryHierarchy tc = part.c.empty() ? BinaryHierarchy() : quick_clustering(part.c, o, rng, stats);

  const std::uint64_t before = o.queries_used();
  BinaryHierarchy out = merge(ta, tb, tc, o);
  if (stats) stats->merge_queries += o.queries_used() - before;
  return out;
}

BinaryHierarchy merge(const BinaryHierarchy& ta, const BinaryHierarchy& tb, const BinaryHierarchy& tc,
                      OrdinalOracle& o) {
  BinaryHierarchy joined = BinaryHierarchy::join(ta, tb);
  if (tc.empty()) return joined;

  const ElementId& x = ta.representative_label(ta.root());
  BinaryHierarchy out = tc;
  NodeId v = out.root();
  while (!out.is_leaf(v)) {
    const PivotDirection d = pivot_query(o, out, v, x);
    if (d == PivotDirection::Outside) break;
    v = d == PivotDirection::Left ? out.left(v) : out.right(v);
  }
  out.graft_sibling(v, joined);
  return out;
}

// ---------------------------------------------------------------------------
// FindSibling

NodeId separator(const BinaryHierarchy& h, const std::vector<char>& in_s) {
  if (in_s.size() != h.node_count()) throw std::invalid_argument("candidate mask has the wrong size");
  std::vector<std::size_t> cnt(h.node_count(), 0);
  for (NodeId v : h.postorder()) {
    cnt[v] = in_s[v] ? 1 : 0;
    if (!h.is_leaf(v)) cnt[v] += cnt[h.left(v)] + cnt[h.right(v)];
  }
  const std::size_t total = cnt[h.root()];
  if (total < 2) throw std::invalid_argument("separator needs at least two candidates");

  NodeId best = kNoNode;
  std::size_t best_value = total + 1;
  for (NodeId v = 0; v < h.node_count(); ++v) {
    if (h.is_leaf(v)) continue;
    const std::size_t l = cnt[h.left(v)];
    const std::size_t r = cnt[h.right(v)];
    const std::size_t value = std::max({l, r, total - l - r});
    if (value < best_value) {
      best_value = value;
      best = v;
    }
  }
  return best;
}

SiblingSearch::SiblingSearch(const BinaryHierarchy& h) : h_(&h), in_s_(h.node_count(), 1) {
  if (h.empty()) throw std::invalid_argument("cannot search an empty hierarchy");
  remaining_ = h.node_count();
  if (!done()) pivot_ = separator(h, in_s_);
}

NodeId SiblingSearch::pivot() const {
  if (done()) throw std::logic_error("search is finished");
  return pivot_;
}

void SiblingSearch::apply(PivotDirection d) {
  if (done()) throw std::logic_error("search is finished");
  const BinaryHierarchy& h = *h_;
  std::vector<char> side(h.node_count(), 0);
  if (d == PivotDirection::Left) {
    mark_subtree(h, h.left(pivot_), side);
  } else if (d == PivotDirection::Right) {
    mark_subtree(h, h.right(pivot_), side);
  } else {
    mark_subtree(h, h.left(pivot_), side);
    mark_subtree(h, h.right(pivot_), side);
    for (auto& c : side) c = !c;
  }
  std::size_t left = 0;
  for (NodeId v = 0; v < h.node_count(); ++v) left += in_s_[v] && side[v];
  if (left == 0) throw std::invalid_argument("answer leaves no candidate; it contradicts earlier answers");
  for (NodeId v = 0; v < h.node_count(); ++v) in_s_[v] = in_s_[v] && side[v];
  remaining_ = left;
  ++queries_;
  if (!done()) pivot_ = separator(h, in_s_);
}

NodeId SiblingSearch::result() const {
  if (!done()) throw std::logic_error("search is not finished");
  const auto it = std::find(in_s_.begin(), in_s_.end(), 1);
  return static_cast<NodeId>(it - in_s_.begin());
}

NodeId find_sibling(const BinaryHierarchy& h, const ElementId& x, OrdinalOracle& o) {
  SiblingSearch search(h);
  while (!search.done()) search.apply(pivot_query(o, h, search.pivot(), x));
  return search.result();
}

// ---------------------------------------------------------------------------
// InsertionClustering

BinaryHierarchy insertion_clustering(std::span<const ElementId> els, OrdinalOracle& o,
                                     std::vector<std::size_t>* per_insertion) {
  if (els.empty()) throw std::invalid_argument("insertion_clustering needs at least one element");
  if (per_insertion) per_insertion->assign(els.size(), 0);
  if (els.size() == 1) return BinaryHierarchy(els[0]);

  BinaryHierarchy h = BinaryHierarchy::pair(els[0], els[1]);
  for (std::size_t i = 2; i < els.size(); ++i) {
    const std::uint64_t before = o.queries_used();
    const NodeId v = find_sibling(h, els[i], o);
    h.insert_sibling(v, els[i]);
    if (per_insertion) (*per_insertion)[i] = o.queries_used() - before;
  }
  return h;
}

}  // namespace hier
