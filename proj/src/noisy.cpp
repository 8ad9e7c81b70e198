#include "hier/noisy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace hier {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Guards ceil() against values like 44.000000000001 produced by rounding.
std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

void mark_subtree(const BinaryHierarchy& h, NodeId top, std::vector<char>& mark, char value) {
  std::vector<NodeId> stack{top};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    mark[v] = value;
    if (!h.is_leaf(v)) {
      stack.push_back(h.left(v));
      stack.push_back(h.right(v));
    }
  }
}

}  // namespace

int choose_kp(double p) {
  if (!(p > 0.5 && p < 1.0)) throw std::invalid_argument("choose_kp needs 0.5 < p < 1");
  const double gap = (2 * p - 1) * (2 * p - 1);
  const double goal = std::sqrt(p);
  for (int k = 1;; k += 2) {
    if (1.0 - std::exp(-k * gap / 2) >= goal) return k;
  }
}

double mw_lambda(double p) {
  if (!(p > 0.5 && p < 1.0)) throw std::invalid_argument("lambda needs 0.5 < p < 1");
  const double q = 1 - p;
  return (1 + p * std::log2(p) + q * std::log2(q)) / (2 * std::log2(p / q));
}

VertexResponse true_vertex_response(const BinaryHierarchy& h, NodeId target, NodeId v) {
  if (v == target) return VertexResponse::here();
  if (!h.is_leaf(v)) {
    if (h.in_subtree(target, h.left(v))) return VertexResponse::toward_node(h.left(v));
    if (h.in_subtree(target, h.right(v))) return VertexResponse::toward_node(h.right(v));
  }
  return VertexResponse::toward_node(h.parent(v));
}

// ---------------------------------------------------------------------------
// VertexQuerySim

VertexQuerySim::VertexQuerySim(const BinaryHierarchy& h, NodeId v, int k_p) : h_(&h), v_(v), k_p_(k_p) {
  if (k_p < 1 || k_p % 2 == 0) throw std::invalid_argument("k_p must be a positive odd number");
  if (v >= h.node_count()) throw std::out_of_range("vertex is not in the hierarchy");
  if (h.node_count() == 1) {
    finish(VertexResponse::here());
  } else if (h.is_root(v)) {
    start(Stage::AtVertex, 1);
  } else if (h.is_leaf(v)) {
    start(Stage::AtParent, 1);
  } else {
    start(Stage::AtVertex, k_p);
  }
}

void VertexQuerySim::start(Stage stage, int batch) {
  stage_ = stage;
  batch_ = batch;
  votes_ = {};
}

void VertexQuerySim::finish(VertexResponse r) {
  stage_ = Stage::Done;
  response_ = r;
}

NodeId VertexQuerySim::pivot() const {
  switch (stage_) {
    case Stage::AtVertex: return v_;
    case Stage::AtParent: return h_->parent(v_);
    case Stage::Done: break;
  }
  throw std::logic_error("vertex query is finished");
}

void VertexQuerySim::apply(PivotDirection d) {
  if (done()) throw std::logic_error("vertex query is finished");
  ++votes_[static_cast<std::size_t>(d)];
  ++queries_;
  if (votes_[0] + votes_[1] + votes_[2] < batch_) return;

  const BinaryHierarchy& h = *h_;
  auto majority = [&](PivotDirection dir) { return 2 * votes_[static_cast<std::size_t>(dir)] > batch_; };
  if (stage_ == Stage::AtVertex) {
    if (majority(PivotDirection::Left)) {
      finish(VertexResponse::toward_node(h.left(v_)));
    } else if (majority(PivotDirection::Right)) {
      finish(VertexResponse::toward_node(h.right(v_)));
    } else if (majority(PivotDirection::Outside)) {
      if (h.is_root(v_)) {
        finish(VertexResponse::here());
      } else {
        start(Stage::AtParent, k_p_);
      }
    } else if (h.is_root(v_)) {
      finish(VertexResponse::toward_node(h.left(v_)));
    } else {
      finish(VertexResponse::toward_node(h.parent(v_)));
    }
    return;
  }
  const NodeId up = h.parent(v_);
  const PivotDirection own_side = h.left(up) == v_ ? PivotDirection::Left : PivotDirection::Right;
  finish(majority(own_side) ? VertexResponse::here() : VertexResponse::toward_node(up));
}

VertexResponse VertexQuerySim::response() const {
  if (!done()) throw std::logic_error("vertex query is not finished");
  return response_;
}

VertexResponse simulate_vertex_query(const BinaryHierarchy& h, NodeId v, const ElementId& x,
                                     OrdinalOracle& o, int k_p) {
  VertexQuerySim sim(h, v, k_p);
  while (!sim.done()) sim.apply(pivot_query(o, h, sim.pivot(), x));
  return sim.response();
}

// ---------------------------------------------------------------------------
// Multiplicative weights

std::size_t MWConfig::rounds(std::size_t n) const {
  return ceil_count(c_rounds * (std::log2(static_cast<double>(n)) + std::log(1 / delta)));
}

std::size_t MWConfig::keep(std::size_t n) const {
  return ceil_count(c_keep * (std::log2(static_cast<double>(n)) + std::log(1 / delta)));
}

void MWConfig::validate() const {
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("MW needs 0.5 < p <= 1");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("MW needs 0 < delta < 1");
  if (!(c_rounds > 0 && c_keep > 0)) throw std::invalid_argument("MW constants must be positive");
}

MultiplicativeWeights::MultiplicativeWeights(const BinaryHierarchy& h, const MWConfig& cfg)
    : h_(&h), cfg_(cfg), log_w_(h.node_count(), 0.0) {
  cfg.validate();
  if (h.empty()) throw std::invalid_argument("cannot search an empty hierarchy");
  rounds_ = cfg.rounds(h.node_count());
  keep_ = std::min(cfg.keep(h.node_count()), h.node_count());
  query_ = weighted_separator();
}

NodeId MultiplicativeWeights::weighted_separator() const {
  const BinaryHierarchy& h = *h_;
  const double top = *std::max_element(log_w_.begin(), log_w_.end());
  std::vector<double> sub(h.node_count(), 0.0);
  for (NodeId v : h.postorder()) {
    // Everything refuted (inconsistent answers at p = 1): fall back to uniform.
    sub[v] = top == kNegInf ? 1.0 : std::exp(log_w_[v] - top);
    if (!h.is_leaf(v)) sub[v] += sub[h.left(v)] + sub[h.right(v)];
  }
  const double total = sub[h.root()];
  NodeId best = kNoNode;
  double best_value = std::numeric_limits<double>::infinity();
  for (NodeId v = 0; v < h.node_count(); ++v) {
    double value = total - sub[v];
    if (!h.is_leaf(v)) value = std::max({value, sub[h.left(v)], sub[h.right(v)]});
    if (value < best_value) {
      best_value = value;
      best = v;
    }
  }
  return best;
}

std::vector<char> MultiplicativeWeights::consistent_nodes(NodeId v, const VertexResponse& r) const {
  const BinaryHierarchy& h = *h_;
  std::vector<char> ok(h.node_count(), 0);
  if (r.is_here()) {
    ok[v] = 1;
  } else if (!h.is_leaf(v) && (r.toward == h.left(v) || r.toward == h.right(v))) {
    mark_subtree(h, r.toward, ok, 1);
  } else if (!h.is_root(v) && r.toward == h.parent(v)) {
    std::fill(ok.begin(), ok.end(), 1);
    mark_subtree(h, v, ok, 0);
  } else {
    throw std::invalid_argument("response points to a non-neighbour");
  }
  return ok;
}

void MultiplicativeWeights::update(NodeId v, const VertexResponse& r) {
  if (done()) throw std::logic_error("all rounds are used");
  const std::vector<char> ok = consistent_nodes(v, r);
  const double yes = std::log(cfg_.p);
  const double no = std::log(1 - cfg_.p);
  for (std::size_t u = 0; u < log_w_.size(); ++u) log_w_[u] += ok[u] ? yes : no;
  ++round_;
  query_ = weighted_separator();
}

std::vector<NodeId> MultiplicativeWeights::top() const {
  std::vector<NodeId> order(log_w_.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return log_w_[a] > log_w_[b]; });
  order.resize(keep_);
  return order;
}

std::vector<NodeId> mw_reduce(const BinaryHierarchy& h, const VertexOracle& vq, const MWConfig& cfg) {
  MultiplicativeWeights mw(h, cfg);
  while (!mw.done()) {
    const NodeId v = mw.query();
    mw.update(v, vq(v));
  }
  return mw.top();
}

// ---------------------------------------------------------------------------
// TreeWalk

const char* to_string(WalkResponse::Kind k) {
  switch (k) {
    case WalkResponse::Kind::Here: return "here";
    case WalkResponse::Kind::Toward: return "toward";
    case WalkResponse::Kind::Elsewhere: return "elsewhere";
  }
  return "?";
}

std::size_t walk_iterations(std::size_t diameter, double p, double delta) {
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("walk needs 0.5 < p <= 1");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("walk needs 0 < delta < 1");
  const double gap = 2 * p - 1;
  const double by_distance = 2.0 * static_cast<double>(diameter + 1) / gap;
  const double by_confidence = 8.0 * std::log(1 / delta) / (gap * gap);
  return ceil_count(std::max(by_distance, by_confidence));
}

TreeWalker::TreeWalker(Adjacency tree, double p, double delta, std::size_t start,
                       std::optional<std::size_t> target)
    : tree_(std::move(tree)), current_(start), counters_(tree_.size(), 0), target_(target) {
  if (tree_.empty()) throw std::invalid_argument("walk needs a non-empty tree");
  if (start >= tree_.size()) throw std::out_of_range("walk start is not a tree node");
  diameter_ = tree_diameter(tree_);
  iterations_ = walk_iterations(diameter_, p, delta);
  if (target_) {
    if (*target_ >= tree_.size()) throw std::out_of_range("walk target is not a tree node");
    target_distance_ = bfs_distances(tree_, *target_);
    initial_potential_ = potential();
  }
}

std::int64_t TreeWalker::potential() const {
  const auto t = *target_;
  return static_cast<std::int64_t>(target_distance_[current_]) + static_cast<std::int64_t>(counter_sum_) -
         2 * static_cast<std::int64_t>(counters_[t]);
}

void TreeWalker::step(const WalkResponse& r) {
  if (done()) throw std::logic_error("walk is finished");
  std::uint64_t& c = counters_[current_];
  switch (r.kind) {
    case WalkResponse::Kind::Here:
      ++c;
      ++counter_sum_;
      break;
    case WalkResponse::Kind::Toward: {
      const auto& nb = tree_[current_];
      if (std::find(nb.begin(), nb.end(), r.toward) == nb.end()) {
        throw std::invalid_argument("walk response points to a non-neighbour");
      }
      if (c > 0) {
        --c;
        --counter_sum_;
      } else {
        current_ = r.toward;
      }
      break;
    }
    case WalkResponse::Kind::Elsewhere:
      if (c > 0) {
        --c;
        --counter_sum_;
      }
      break;
  }
  ++iteration_;
  std::optional<std::int64_t> phi;
  if (target_) phi = potential();
  trace_.push_back({iteration_, current_, r, counters_[current_], phi});
}

std::size_t TreeWalker::result() const {
  if (!done()) throw std::logic_error("walk is not finished");
  return current_;
}

std::size_t TreeWalker::positive_counters() const {
  return static_cast<std::size_t>(
      std::count_if(counters_.begin(), counters_.end(), [](std::uint64_t c) { return c > 0; }));
}

std::string TreeWalker::trace_csv() const {
  std::ostringstream out;
  out << "iteration,q,response,counter,potential\n";
  for (const auto& row : trace_) {
    out << row.iteration << ',' << row.query << ',' << to_string(row.response.kind);
    if (row.response.kind == WalkResponse::Kind::Toward) out << ':' << row.response.toward;
    out << ',' << row.counter << ',';
    if (row.potential) out << *row.potential;
    out << '\n';
  }
  return out.str();
}

std::size_t tree_walk(const Adjacency& tree, const std::function<WalkResponse(std::size_t)>& vq, double p,
                      double delta, std::size_t start) {
  TreeWalker walker(tree, p, delta, start);
  while (!walker.done()) walker.step(vq(walker.current()));
  return walker.result();
}

// ---------------------------------------------------------------------------
// Robust sibling search

NoisyConstants NoisyConstants::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read constants file: " + path);
  const auto j = nlohmann::json::parse(in);
  NoisyConstants c;
  c.c_rounds = j.value("c_rounds", c.c_rounds);
  c.c_keep = j.value("c_keep", c.c_keep);
  if (!(c.c_rounds > 0 && c.c_keep > 0)) throw std::invalid_argument("constants must be positive");
  return c;
}

NoisyConstants NoisyConstants::calibrated() {
  if (const char* env = std::getenv("HIER_CONSTANTS"); env && *env) return load(env);
#ifdef HIER_CONSTANTS_FILE
  if (std::ifstream(HIER_CONSTANTS_FILE)) return load(HIER_CONSTANTS_FILE);
#endif
  return {};
}

RobustConfig RobustConfig::make(double p, double delta, const NoisyConstants& constants) {
  RobustConfig cfg;
  cfg.p = p;
  cfg.delta = delta;
  cfg.k_p = p >= 1.0 ? 1 : choose_kp(p);
  cfg.mw = MWConfig{p, delta / 2, constants.c_rounds, constants.c_keep};
  cfg.validate();
  return cfg;
}

void RobustConfig::validate() const {
  if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("robust search needs 0.5 < p <= 1");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("robust search needs 0 < delta < 1");
  if (k_p < 1 || k_p % 2 == 0) throw std::invalid_argument("k_p must be a positive odd number");
  mw.validate();
}

RobustSiblingSearch::RobustSiblingSearch(const BinaryHierarchy& h, const RobustConfig& cfg,
                                         std::optional<NodeId> trace_target)
    : h_(&h), cfg_(cfg), mw_(h, cfg.mw), trace_target_(trace_target) {
  cfg.validate();
  if (h.node_count() == 1) {
    result_ = h.root();
    phase_ = Phase::Done;
    return;
  }
  advance();
}

NodeId RobustSiblingSearch::pivot() const {
  if (done()) throw std::logic_error("search is finished");
  return sim_->pivot();
}

void RobustSiblingSearch::apply(PivotDirection d) {
  if (done()) throw std::logic_error("search is finished");
  sim_->apply(d);
  advance();
}

NodeId RobustSiblingSearch::result() const {
  if (!done()) throw std::logic_error("search is not finished");
  return result_;
}

WalkResponse RobustSiblingSearch::project(const VertexResponse& r) const {
  if (r.is_here()) return WalkResponse::here();
  for (const auto& e : contracted_->edges[walker_->current()]) {
    if (e.first_step == r.toward) return WalkResponse::toward_node(e.to);
  }
  return WalkResponse::elsewhere();
}

void RobustSiblingSearch::advance() {
  while (phase_ != Phase::Done) {
    if (sim_ && !sim_->done()) return;
    if (sim_) {
      const VertexResponse r = sim_->response();
      stats_.ordinal_queries += sim_->queries();
      ++stats_.vertex_queries;
      sim_.reset();
      if (phase_ == Phase::Reduce) {
        mw_.update(mw_.query(), r);
      } else {
        walker_->step(project(r));
      }
      continue;
    }
    if (phase_ == Phase::Reduce) {
      if (!mw_.done()) {
        sim_.emplace(*h_, mw_.query(), cfg_.k_p);
        continue;
      }
      candidates_ = mw_.top();
      contracted_ = contracted_tree(*h_, candidates_);
      std::optional<std::size_t> target;
      if (trace_target_) target = contracted_->index_of(*trace_target_);
      walker_.emplace(contracted_->adjacency(), cfg_.p, cfg_.delta / 2, *contracted_->index_of(candidates_.front()),
                      target);
      stats_.mw_rounds = mw_.rounds();
      stats_.candidates = candidates_.size();
      stats_.contracted_size = contracted_->size();
      stats_.walk_iterations = walker_->iterations();
      phase_ = Phase::Walk;
      continue;
    }
    if (walker_->done()) {
      result_ = contracted_->nodes[walker_->result()];
      phase_ = Phase::Done;
      return;
    }
    sim_.emplace(*h_, contracted_->nodes[walker_->current()], cfg_.k_p);
  }
}

NodeId robust_find_sibling(const BinaryHierarchy& h, const ElementId& x, OrdinalOracle& o,
                           const RobustConfig& cfg, RobustStats* stats) {
  RobustSiblingSearch search(h, cfg);
  while (!search.done()) search.apply(pivot_query(o, h, search.pivot(), x));
  if (stats) *stats = search.stats();
  return search.result();
}

BinaryHierarchy noisy_insertion_clustering(std::span<const ElementId> els, OrdinalOracle& o, double p,
                                           double delta, const NoisyConstants& constants,
                                           std::vector<RobustStats>* per_insertion) {
  if (els.empty()) throw std::invalid_argument("noisy_insertion_clustering needs at least one element");
  if (per_insertion) per_insertion->assign(els.size(), RobustStats{});
  if (els.size() == 1) return BinaryHierarchy(els[0]);

  const RobustConfig cfg = RobustConfig::make(p, delta / static_cast<double>(els.size()), constants);
  BinaryHierarchy h = BinaryHierarchy::pair(els[0], els[1]);
  for (std::size_t i = 2; i < els.size(); ++i) {
    RobustStats s;
    const NodeId v = robust_find_sibling(h, els[i], o, cfg, &s);
    h.insert_sibling(v, els[i]);
    if (per_insertion) (*per_insertion)[i] = s;
  }
  return h;
}

}  // namespace hier
