#include "hier/oracles.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace hier {

const char* to_string(PivotDirection d) {
  switch (d) {
    case PivotDirection::Left: return "left";
    case PivotDirection::Right: return "right";
    case PivotDirection::Outside: return "outside";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// QueryLog

void QueryLog::record(const std::string& phase, std::uint64_t count) { phases_[phase] += count; }

std::uint64_t QueryLog::count(const std::string& phase) const {
  const auto it = phases_.find(phase);
  return it == phases_.end() ? 0 : it->second;
}

std::uint64_t QueryLog::total() const {
  return std::accumulate(phases_.begin(), phases_.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

std::string QueryLog::to_csv() const {
  std::ostringstream out;
  out << "phase,queries\n";
  for (const auto& [phase, n] : phases_) out << phase << ',' << n << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Oracles

TripletAnswer OrdinalOracle::answer(const Triplet& t) {
  ++used_;
  TripletAnswer a = respond(t);
  if (!a.within(t)) throw std::logic_error("oracle answered with a pair outside the triplet");
  return a;
}

ExactOracle::ExactOracle(BinaryHierarchy truth)
    : truth_(std::make_unique<BinaryHierarchy>(std::move(truth))), index_(*truth_) {}

TripletAnswer ExactOracle::respond(const Triplet& t) { return index_.answer(t); }

NoiseModel NoiseModel::uniform(double p) { return {p, Adversary::UniformWrong, {}, {}}; }

NoiseModel NoiseModel::fixed(double p, FixedWrongRule rule) {
  return {p, Adversary::FixedWrong, rule, {}};
}

NoiseModel NoiseModel::custom(double p, AdversaryCallback cb) {
  return {p, Adversary::Callback, {}, std::move(cb)};
}

void NoiseModel::validate() const {
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("noise model needs 0.5 < p <= 1");
  if (adversary == Adversary::Callback && !callback) {
    throw std::invalid_argument("callback adversary without a callback");
  }
}

NoiseModel parse_noise_model(const std::string& adversary, double p) {
  NoiseModel m;
  if (adversary == "uniform") {
    m = NoiseModel::uniform(p);
  } else if (adversary == "fixed") {
    m = NoiseModel::fixed(p, FixedWrongRule::SmallestPair);
  } else if (adversary == "fixed-largest") {
    m = NoiseModel::fixed(p, FixedWrongRule::LargestPair);
  } else {
    throw std::invalid_argument("unknown adversary: " + adversary);
  }
  m.validate();
  return m;
}

NoisyOracle::NoisyOracle(BinaryHierarchy truth, NoiseModel model, std::uint64_t seed)
    : truth_(std::make_unique<BinaryHierarchy>(std::move(truth))),
      index_(*truth_),
      model_(std::move(model)),
      rng_(make_rng(seed)) {
  model_.validate();
}

TripletAnswer NoisyOracle::respond(const Triplet& t) {
  TripletAnswer truth = index_.answer(t);
  if (bernoulli(rng_, model_.p)) return truth;
  std::array<const TripletAnswer*, 2> wrong{};
  std::size_t k = 0;
  const auto pairs = pairs_of(t);
  for (const auto& pr : pairs) {
    if (!(pr == truth)) wrong[k++] = &pr;
  }
  switch (model_.adversary) {
    case Adversary::UniformWrong:
      return *wrong[uniform_index(rng_, 2)];
    case Adversary::FixedWrong:
      return model_.rule == FixedWrongRule::SmallestPair ? *wrong[0] : *wrong[1];
    case Adversary::Callback:
      return model_.callback(t, truth, rng_);
  }
  return truth;
}

CountingOracle::CountingOracle(OrdinalOracle& inner, QueryLog& log, std::string phase)
    : inner_(&inner), log_(&log), phase_(std::move(phase)) {}

TripletAnswer CountingOracle::respond(const Triplet& t) {
  log_->record(phase_);
  return inner_->answer(t);
}

// ---------------------------------------------------------------------------
// Pivot queries

Triplet pivot_triplet(const BinaryHierarchy& h, NodeId v, const ElementId& x) {
  if (h.is_leaf(v)) throw HierarchyError("pivot must be an internal node");
  if (h.contains(x)) throw HierarchyError("element is already in the hierarchy: " + x);
  return Triplet(h.representative_label(h.left(v)), h.representative_label(h.right(v)), x);
}

PivotDirection interpret_pivot(const BinaryHierarchy& h, NodeId v, const ElementId& x,
                               const TripletAnswer& a) {
  const ElementId& xl = h.representative_label(h.left(v));
  const ElementId& xr = h.representative_label(h.right(v));
  if (a == TripletAnswer(xl, x)) return PivotDirection::Left;
  if (a == TripletAnswer(xr, x)) return PivotDirection::Right;
  if (a == TripletAnswer(xl, xr)) return PivotDirection::Outside;
  throw HierarchyError("answer is not a pair of the pivot triplet");
}

PivotDirection pivot_query(OrdinalOracle& o, const BinaryHierarchy& h, NodeId v, const ElementId& x) {
  const Triplet t = pivot_triplet(h, v, x);
  return interpret_pivot(h, v, x, o.answer(t));
}

NodeId true_sibling(const BinaryHierarchy& truth, const BinaryHierarchy& partial, const ElementId& x) {
  if (partial.contains(x)) throw HierarchyError("element already placed: " + x);
  const auto elements = partial.elements();
  const std::unordered_set<ElementId> placed(elements.begin(), elements.end());
  // Smallest truth cluster above x that meets the partial tree, minus x.
  NodeId u = truth.leaf_of(x);
  std::vector<ElementId> sibling_cluster;
  while (sibling_cluster.empty()) {
    const NodeId p = truth.parent(u);
    if (p == kNoNode) throw HierarchyError("partial tree shares no element with the truth");
    const NodeId other = truth.left(p) == u ? truth.right(p) : truth.left(p);
    for (auto& e : truth.cluster(other)) {
      if (placed.contains(e)) sibling_cluster.push_back(std::move(e));
    }
    u = p;
  }
  // Its root in the partial tree is the LCA of its members there.
  NodeId top = partial.leaf_of(sibling_cluster.front());
  for (const auto& e : sibling_cluster) {
    const NodeId leaf = partial.leaf_of(e);
    while (!partial.in_subtree(leaf, top)) top = partial.parent(top);
  }
  return top;
}

}  // namespace hier
