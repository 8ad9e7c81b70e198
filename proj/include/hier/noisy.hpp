#pragma once

// Noise-tolerant sibling search: simulated vertex queries, multiplicative
// weights candidate reduction, the counter walk, and noisy insertion.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hier/hierarchy.hpp"
#include "hier/oracles.hpp"

namespace hier {

// Smallest odd k with 1 - exp(-k(2p-1)^2/2) >= sqrt(p). Requires 0.5 < p < 1.
int choose_kp(double p);

// (1 + p log p + (1-p) log(1-p)) / (2 log(p/(1-p))), base-2 logarithms.
// Diagnostic only.
double mw_lambda(double p);

struct VertexResponse {
  enum class Kind { TargetHere, Toward };

  Kind kind = Kind::TargetHere;
  NodeId toward = kNoNode;

  static VertexResponse here() { return {Kind::TargetHere, kNoNode}; }
  static VertexResponse toward_node(NodeId u) { return {Kind::Toward, u}; }
  bool is_here() const { return kind == Kind::TargetHere; }

  friend bool operator==(const VertexResponse&, const VertexResponse&) = default;
};

// The correct vertex-query answer for a known target.
VertexResponse true_vertex_response(const BinaryHierarchy& h, NodeId target, NodeId v);

// One simulated vertex query at v, built from pivot queries. Feed pivot
// directions for pivot() to apply() until done().
class VertexQuerySim {
 public:
  VertexQuerySim(const BinaryHierarchy& h, NodeId v, int k_p);

  bool done() const { return stage_ == Stage::Done; }
  NodeId pivot() const;
  void apply(PivotDirection d);
  VertexResponse response() const;
  std::size_t queries() const { return queries_; }

 private:
  enum class Stage { AtVertex, AtParent, Done };

  void start(Stage stage, int batch);
  void finish(VertexResponse r);

  const BinaryHierarchy* h_;
  NodeId v_;
  int k_p_;
  Stage stage_ = Stage::Done;
  int batch_ = 0;
  std::array<int, 3> votes_{};
  std::size_t queries_ = 0;
  VertexResponse response_;
};

VertexResponse simulate_vertex_query(const BinaryHierarchy& h, NodeId v, const ElementId& x,
                                     OrdinalOracle& o, int k_p);

struct MWConfig {
  static constexpr double kDefaultRounds = 8.0;
  static constexpr double kDefaultKeep = 4.0;

  double p = 0.9;
  double delta = 0.1;
  double c_rounds = kDefaultRounds;
  double c_keep = kDefaultKeep;

  double lambda() const { return mw_lambda(p); }
  // ceil(c * (log2 n + ln(1/delta)))
  std::size_t rounds(std::size_t n) const;
  std::size_t keep(std::size_t n) const;
  void validate() const;
};

// Weight update and candidate selection over every node of h.
class MultiplicativeWeights {
 public:
  MultiplicativeWeights(const BinaryHierarchy& h, const MWConfig& cfg);

  bool done() const { return round_ >= rounds_; }
  // Node minimising the largest total weight among the components of h - {v}.
  NodeId query() const { return query_; }
  void update(NodeId v, const VertexResponse& r);

  // The keep() heaviest nodes, heaviest first, ties by node id.
  std::vector<NodeId> top() const;
  // Natural-log weights; -inf once refuted with p = 1.
  const std::vector<double>& log_weights() const { return log_w_; }
  // Which nodes agree with response r at v.
  std::vector<char> consistent_nodes(NodeId v, const VertexResponse& r) const;
  std::size_t round() const { return round_; }
  std::size_t rounds() const { return rounds_; }

 private:
  NodeId weighted_separator() const;

  const BinaryHierarchy* h_;
  MWConfig cfg_;
  std::size_t rounds_;
  std::size_t keep_;
  std::size_t round_ = 0;
  std::vector<double> log_w_;
  NodeId query_ = kNoNode;
};

using VertexOracle = std::function<VertexResponse(NodeId)>;

std::vector<NodeId> mw_reduce(const BinaryHierarchy& h, const VertexOracle& vq, const MWConfig& cfg);

// Response of a vertex query on an abstract tree over 0..size-1.
struct WalkResponse {
  enum class Kind { Here, Toward, Elsewhere };

  Kind kind = Kind::Here;
  std::size_t toward = 0;

  static WalkResponse here() { return {Kind::Here, 0}; }
  static WalkResponse toward_node(std::size_t u) { return {Kind::Toward, u}; }
  // A direction that leaves the tree: no neighbour to move to.
  static WalkResponse elsewhere() { return {Kind::Elsewhere, 0}; }
};

const char* to_string(WalkResponse::Kind k);

// Iterations of the counter walk for diameter D.
std::size_t walk_iterations(std::size_t diameter, double p, double delta);

class TreeWalker {
 public:
  struct TraceRow {
    std::size_t iteration;
    std::size_t query;
    WalkResponse response;
    std::uint64_t counter;  // c(q) after the step
    std::optional<std::int64_t> potential;  // target potential after the step, when known
  };

  // With a known target the trace also carries the potential after every step.
  TreeWalker(Adjacency tree, double p, double delta, std::size_t start = 0,
             std::optional<std::size_t> target = std::nullopt);

  bool done() const { return iteration_ >= iterations_; }
  std::size_t current() const { return current_; }
  void step(const WalkResponse& r);
  std::size_t result() const;

  std::size_t iteration() const { return iteration_; }
  std::size_t iterations() const { return iterations_; }
  std::size_t diameter() const { return diameter_; }
  const std::vector<std::uint64_t>& counters() const { return counters_; }
  std::size_t positive_counters() const;
  std::optional<std::int64_t> initial_potential() const { return initial_potential_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  // iteration,q,response,counter,potential (blank without a target)
  std::string trace_csv() const;

 private:
  std::int64_t potential() const;

  Adjacency tree_;
  std::size_t diameter_;
  std::size_t iterations_;
  std::size_t iteration_ = 0;
  std::size_t current_;
  std::vector<std::uint64_t> counters_;
  std::uint64_t counter_sum_ = 0;
  std::optional<std::size_t> target_;
  std::vector<std::size_t> target_distance_;
  std::optional<std::int64_t> initial_potential_;
  std::vector<TraceRow> trace_;
};

std::size_t tree_walk(const Adjacency& tree, const std::function<WalkResponse(std::size_t)>& vq, double p,
                      double delta, std::size_t start = 0);

// Constants used by the noisy pipeline, loadable from a JSON file with
// "c_rounds" and "c_keep".
struct NoisyConstants {
  double c_rounds = MWConfig::kDefaultRounds;
  double c_keep = MWConfig::kDefaultKeep;

  static NoisyConstants load(const std::string& path);
  // $HIER_CONSTANTS if set, else the calibration file shipped in config/,
  // else the built-in defaults.
  static NoisyConstants calibrated();
};

struct RobustConfig {
  double p = 0.9;
  double delta = 0.1;
  int k_p = 1;
  MWConfig mw;

  // k_p from choose_kp (1 when p = 1); mw uses delta/2.
  static RobustConfig make(double p, double delta, const NoisyConstants& constants = {});
  void validate() const;
};

struct RobustStats {
  std::uint64_t ordinal_queries = 0;
  std::uint64_t vertex_queries = 0;
  std::size_t mw_rounds = 0;
  std::size_t walk_iterations = 0;
  std::size_t candidates = 0;
  std::size_t contracted_size = 0;
};

// Noise-tolerant FindSibling: multiplicative weights over h, then the counter
// walk on the contracted tree of the surviving candidates.
class RobustSiblingSearch {
 public:
  // trace_target (instrumentation only): the true answer in h, used for the
  // walk potential when it survives the reduction.
  RobustSiblingSearch(const BinaryHierarchy& h, const RobustConfig& cfg,
                      std::optional<NodeId> trace_target = std::nullopt);

  bool done() const { return phase_ == Phase::Done; }
  NodeId pivot() const;
  void apply(PivotDirection d);
  NodeId result() const;

  const RobustStats& stats() const { return stats_; }
  const std::vector<NodeId>& candidates() const { return candidates_; }
  // The walk over the contracted tree; null during the reduction.
  const TreeWalker* walker() const { return walker_ ? &*walker_ : nullptr; }
  // Candidate nodes of h in contracted-tree index order.
  const ContractedTree* contracted() const { return contracted_ ? &*contracted_ : nullptr; }

 private:
  enum class Phase { Reduce, Walk, Done };

  void advance();
  WalkResponse project(const VertexResponse& r) const;

  const BinaryHierarchy* h_;
  RobustConfig cfg_;
  Phase phase_ = Phase::Reduce;
  MultiplicativeWeights mw_;
  std::optional<VertexQuerySim> sim_;
  std::vector<NodeId> candidates_;
  std::optional<ContractedTree> contracted_;
  std::optional<TreeWalker> walker_;
  NodeId result_ = kNoNode;
  std::optional<NodeId> trace_target_;
  RobustStats stats_;
};

NodeId robust_find_sibling(const BinaryHierarchy& h, const ElementId& x, OrdinalOracle& o,
                           const RobustConfig& cfg, RobustStats* stats = nullptr);

// Insertion with robust_find_sibling at delta/n per insertion.
BinaryHierarchy noisy_insertion_clustering(std::span<const ElementId> els, OrdinalOracle& o, double p,
                                           double delta, const NoisyConstants& constants = {},
                                           std::vector<RobustStats>* per_insertion = nullptr);

}  // namespace hier
