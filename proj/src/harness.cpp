#include "hier/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hier/noiseless.hpp"
#include "hier/oracles.hpp"

namespace hier {

namespace {

using Clock = std::chrono::steady_clock;

const std::vector<std::string> kExperiments{
    "insertion-noiseless", "quick-noiseless", "noisy-insertion", "robust-find-sibling",
    "tree-walk",           "mw-reduce",       "nonadaptive-lb",
};

bool is_noisy(const std::string& e) {
  return e == "noisy-insertion" || e == "robust-find-sibling" || e == "tree-walk" || e == "mw-reduce";
}

double default_p(const std::string& e) { return e == "tree-walk" ? 0.75 : 0.8; }

double default_delta(const std::string& e) {
  if (e == "noisy-insertion") return 0.1;
  if (e == "tree-walk") return 0.01;
  return 0.05;
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string fmt_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  const double m = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<ElementId> shuffled_elements(const BinaryHierarchy& truth, Rng& rng) {
  auto els = truth.elements();
  shuffle(std::span(els), rng);
  return els;
}

struct SiblingInstance {
  BinaryHierarchy truth;
  BinaryHierarchy partial;
  ElementId x;
  NodeId target = kNoNode;
};

// Truth over n + 1 leaves; the partial tree is induced by all but one of them.
SiblingInstance sibling_instance(TreeShape shape, std::size_t n, Rng& rng) {
  SiblingInstance inst;
  inst.truth = make_truth(shape, n + 1, rng);
  const auto els = inst.truth.elements();
  inst.x = els[uniform_index(rng, els.size())];
  std::vector<ElementId> rest;
  for (const auto& e : els) {
    if (e != inst.x) rest.push_back(e);
  }
  inst.partial = induced_tree(inst.truth, rest);
  inst.target = true_sibling(inst.truth, inst.partial, inst.x);
  return inst;
}

void run_experiment(const ExperimentConfig& cfg, std::size_t n, Rng& rng, TrialRecord& rec) {
  const std::string& e = cfg.experiment;
  const double p = cfg.p.value_or(default_p(e));
  const double delta = cfg.delta.value_or(default_delta(e));

  if (e == "insertion-noiseless") {
    const auto truth = make_truth(cfg.tree_shape, n, rng);
    const auto els = shuffled_elements(truth, rng);
    ExactOracle o(truth);
    rec.success = equivalent(insertion_clustering(els, o), truth);
    rec.ordinal_queries = o.queries_used();
  } else if (e == "quick-noiseless") {
    const auto truth = make_truth(cfg.tree_shape, n, rng);
    const auto els = shuffled_elements(truth, rng);
    ExactOracle o(truth);
    QuickStats stats;
    rec.success = equivalent(quick_clustering(els, o, rng, &stats), truth);
    rec.ordinal_queries = o.queries_used();
    rec.iterations = std::accumulate(stats.rounds_per_call.begin(), stats.rounds_per_call.end(), std::uint64_t{0});
    rec.metric = stats.mean_rounds();
  } else if (e == "noisy-insertion") {
    const auto truth = make_truth(cfg.tree_shape, n, rng);
    const auto els = shuffled_elements(truth, rng);
    NoisyOracle o(truth, parse_noise_model(cfg.adversary, p), rng());
    std::vector<RobustStats> per;
    rec.success = equivalent(noisy_insertion_clustering(els, o, p, delta, cfg.constants, &per), truth);
    rec.ordinal_queries = o.queries_used();
    std::uint64_t vertex = 0, walk = 0;
    for (const auto& s : per) {
      vertex += s.vertex_queries;
      walk += s.walk_iterations;
    }
    rec.vertex_queries = vertex;
    rec.iterations = walk;
    rec.metric = n > 2 ? static_cast<double>(rec.ordinal_queries) / static_cast<double>(n - 2) : 0.0;
  } else if (e == "robust-find-sibling") {
    const auto inst = sibling_instance(cfg.tree_shape, n, rng);
    NoisyOracle o(inst.truth, parse_noise_model(cfg.adversary, p), rng());
    RobustStats stats;
    const NodeId got = robust_find_sibling(inst.partial, inst.x, o, RobustConfig::make(p, delta, cfg.constants), &stats);
    rec.success = got == inst.target;
    rec.ordinal_queries = stats.ordinal_queries;
    rec.vertex_queries = stats.vertex_queries;
    rec.iterations = stats.walk_iterations;
    rec.metric = static_cast<double>(stats.candidates);
  } else if (e == "tree-walk") {
    // n is the diameter.
    const auto tree = random_tree_with_diameter(n, n, rng);
    const std::size_t target = uniform_index(rng, tree.size());
    const std::size_t start = uniform_index(rng, tree.size());
    const auto dist = bfs_distances(tree, target);
    TreeWalker walker(tree, p, delta, start);
    while (!walker.done()) walker.step(noisy_vertex_answer(tree, dist, walker.current(), p, cfg.adversary, rng));
    rec.success = walker.result() == target;
    rec.vertex_queries = walker.iterations();
    rec.iterations = walker.iterations();
    rec.metric = static_cast<double>(tree.size());
  } else if (e == "mw-reduce") {
    // n leaves, 2n - 1 nodes.
    const auto h = make_truth(cfg.tree_shape, n, rng);
    const NodeId target = static_cast<NodeId>(uniform_index(rng, h.node_count()));
    MWConfig mc{p, delta, cfg.constants.c_rounds, cfg.constants.c_keep};
    MultiplicativeWeights mw(h, mc);
    while (!mw.done()) {
      const NodeId v = mw.query();
      mw.update(v, noisy_vertex_answer(h, target, v, p, cfg.adversary, rng));
    }
    const auto top = mw.top();
    rec.success = std::find(top.begin(), top.end(), target) != top.end();
    rec.vertex_queries = mw.rounds();
    rec.iterations = mw.rounds();
    rec.metric = static_cast<double>(top.size());
  } else if (e == "nonadaptive-lb") {
    const std::size_t learned = nonadaptive_trial(n, cfg.k, rng);
    rec.success = learned == n / 4;
    rec.ordinal_queries = cfg.k;
    rec.metric = static_cast<double>(learned);
  } else {
    throw std::invalid_argument("unknown experiment: " + e);
  }
}

}  // namespace

TreeShape parse_tree_shape(const std::string& s) {
  if (s == "random") return TreeShape::Random;
  if (s == "caterpillar") return TreeShape::Caterpillar;
  if (s == "balanced") return TreeShape::Balanced;
  throw std::invalid_argument("unknown tree shape: " + s);
}

const char* to_string(TreeShape s) {
  switch (s) {
    case TreeShape::Random: return "random";
    case TreeShape::Caterpillar: return "caterpillar";
    case TreeShape::Balanced: return "balanced";
  }
  return "?";
}

BinaryHierarchy make_truth(TreeShape shape, std::size_t n, Rng& rng) {
  auto labels = default_labels(n);
  switch (shape) {
    case TreeShape::Random: return random_hierarchy(labels, rng);
    case TreeShape::Caterpillar: return caterpillar_hierarchy(labels);
    case TreeShape::Balanced: return balanced_hierarchy(labels);
  }
  throw std::invalid_argument("unknown tree shape");
}

const std::vector<std::string>& experiment_names() { return kExperiments; }

void ExperimentConfig::validate() const {
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end()) {
    throw std::invalid_argument("unknown experiment: " + experiment);
  }
  if (n_values.empty()) throw std::invalid_argument("n_values must not be empty");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (p && !(*p > 0.5 && *p <= 1.0)) throw std::invalid_argument("p must lie in (0.5, 1]");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (adversary != "uniform" && adversary != "fixed" && adversary != "fixed-largest") {
    throw std::invalid_argument("unknown adversary: " + adversary);
  }
  if (!(constants.c_rounds > 0) || !(constants.c_keep > 0)) throw std::invalid_argument("constants must be positive");
  for (std::size_t n : n_values) {
    if (experiment == "tree-walk") {
      if (n < 1) throw std::invalid_argument("tree-walk needs diameter >= 1");
    } else if (experiment == "nonadaptive-lb") {
      if (n < 8 || !is_power_of_two(n)) throw std::invalid_argument("nonadaptive-lb needs n a power of two, >= 8");
    } else if (experiment == "mw-reduce" || experiment == "robust-find-sibling") {
      if (n < 2) throw std::invalid_argument(experiment + " needs n >= 2");
    } else if (n < 1) {
      throw std::invalid_argument("n must be at least 1");
    }
  }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::vector<std::string> known{"experiment", "n",     "trials", "p",         "delta", "adversary",
                                              "seed",       "shape", "out",    "constants", "k",     "timing"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("n")) {
      const auto& n = j.at("n");
      if (n.is_array()) {
        c.n_values = n.get<std::vector<std::size_t>>();
      } else {
        c.n_values = {n.get<std::size_t>()};
      }
    }
    if (j.contains("trials")) c.trials = j.at("trials").get<std::size_t>();
    if (j.contains("p")) c.p = j.at("p").get<double>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("adversary")) c.adversary = j.at("adversary").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("shape")) c.tree_shape = parse_tree_shape(j.at("shape").get<std::string>());
    if (j.contains("out")) c.output_path = j.at("out").get<std::string>();
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("constants")) c.constants = NoisyConstants::load(j.at("constants").get<std::string>());
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("bad config value: ") + ex.what());
  }
  return c;
}

Proportion wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {};
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double denom = 1 + z * z / n;
  const double centre = (ph + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom;
  return {ph, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t n, std::size_t trial) {
  TrialRecord rec;
  rec.experiment = cfg.experiment;
  rec.n = n;
  rec.trial = trial;
  Rng rng = make_rng(derive_seed(cfg.seed, n, trial));
  const auto t0 = Clock::now();
  run_experiment(cfg, n, rng, rec);
  rec.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return rec;
}

RunResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult out;
  out.config = cfg;
  std::vector<std::size_t> ns = cfg.n_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (std::size_t n : ns) {
    for (std::size_t t = 0; t < cfg.trials; ++t) out.records.push_back(run_trial(cfg, n, t));
  }
  out.summary = summarize(out.records);
  if (!cfg.output_path.empty()) write_csv(out.records, cfg.output_path);
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::map<std::size_t, std::vector<const TrialRecord*>> by_n;
  for (const auto& r : records) by_n[r.n].push_back(&r);
  std::vector<SummaryRow> rows;
  for (const auto& [n, group] : by_n) {
    SummaryRow row;
    row.n = n;
    row.trials = group.size();
    std::vector<double> q, vq, it, metric;
    for (const TrialRecord* r : group) {
      row.successes += r->success;
      q.push_back(static_cast<double>(r->ordinal_queries));
      row.max_queries = std::max(row.max_queries, r->ordinal_queries);
      if (r->vertex_queries) vq.push_back(static_cast<double>(*r->vertex_queries));
      if (r->iterations) it.push_back(static_cast<double>(*r->iterations));
      if (r->metric) metric.push_back(*r->metric);
      row.wall_time += r->wall_time;
    }
    row.success = wilson_interval(row.successes, row.trials);
    row.mean_queries = mean_of(q);
    row.sd_queries = sd_of(q);
    if (!vq.empty()) row.mean_vertex_queries = mean_of(vq);
    if (!it.empty()) row.mean_iterations = mean_of(it);
    if (!metric.empty()) {
      row.mean_metric = mean_of(metric);
      row.sd_metric = sd_of(metric);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::vector<const TrialRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const TrialRecord* a, const TrialRecord* b) {
    return std::tie(a->n, a->trial) < std::tie(b->n, b->trial);
  });
  std::ostringstream out;
  out << kCsvSchema << '\n';
  out << "experiment,n,trial,success,ordinal_queries,vertex_queries,iterations,metric\n";
  for (const TrialRecord* r : sorted) {
    out << r->experiment << ',' << r->n << ',' << r->trial << ',' << (r->success ? 1 : 0) << ','
        << r->ordinal_queries << ',';
    if (r->vertex_queries) out << *r->vertex_queries;
    out << ',';
    if (r->iterations) out << *r->iterations;
    out << ',';
    if (r->metric) out << fmt(*r->metric);
    out << '\n';
  }
  return out.str();
}

void write_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_csv(records);
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string format_summary(const RunResult& result, bool timing) {
  const auto& c = result.config;
  std::ostringstream out;
  out << "experiment " << c.experiment << "  seed " << c.seed << "  trials " << c.trials;
  if (is_noisy(c.experiment)) {
    out << "  p " << fmt(c.p.value_or(default_p(c.experiment))) << "  delta "
        << fmt(c.delta.value_or(default_delta(c.experiment))) << "  adversary " << c.adversary;
  }
  if (c.experiment == "nonadaptive-lb") out << "  k " << c.k;
  if (c.experiment != "tree-walk" && c.experiment != "nonadaptive-lb") out << "  shape " << to_string(c.tree_shape);
  out << '\n';
  out << "n\tsuccess\trate [95% CI]\tmean_q\tmax_q\tsd_q";
  out << "\tmean_vq\tmean_iter\tmean_metric";
  if (timing) out << "\tseconds";
  out << '\n';
  for (const auto& r : result.summary) {
    out << r.n << '\t' << r.successes << '/' << r.trials << '\t' << fmt_fixed(r.success.rate, 4) << " ["
        << fmt_fixed(r.success.low, 4) << ", " << fmt_fixed(r.success.high, 4) << "]\t" << fmt_fixed(r.mean_queries, 2)
        << '\t' << r.max_queries << '\t' << fmt_fixed(r.sd_queries, 2) << '\t'
        << (r.mean_vertex_queries ? fmt_fixed(*r.mean_vertex_queries, 2) : "-") << '\t'
        << (r.mean_iterations ? fmt_fixed(*r.mean_iterations, 2) : "-") << '\t'
        << (r.mean_metric ? fmt_fixed(*r.mean_metric, 4) : "-");
    if (timing) out << '\t' << fmt_fixed(r.wall_time, 3);
    out << '\n';
  }
  if (c.experiment == "nonadaptive-lb") {
    for (const auto& r : result.summary) {
      out << "bound n=" << r.n << ": 6k/((n-1)(n-2)) = " << fmt_fixed(nonadaptive_bound(r.n, c.k), 4) << '\n';
    }
  }
  return out.str();
}

Adjacency random_tree_with_diameter(std::size_t diameter, std::size_t extra, Rng& rng) {
  const std::size_t spine = diameter + 1;
  Adjacency adj(spine);
  std::vector<std::size_t> pos(spine), height(spine, 0);
  for (std::size_t i = 0; i < spine; ++i) {
    pos[i] = i;
    if (i > 0) {
      adj[i].push_back(i - 1);
      adj[i - 1].push_back(i);
    }
  }
  // A pendant node at height h hanging off spine position s keeps the
  // diameter iff h <= min(s, D - s).
  if (diameter >= 2) {
    for (std::size_t added = 0; added < extra;) {
      const std::size_t u = uniform_index(rng, adj.size());
      const std::size_t h = height[u] + 1;
      if (h > std::min(pos[u], diameter - pos[u])) continue;
      const std::size_t v = adj.size();
      adj.emplace_back();
      adj[u].push_back(v);
      adj[v].push_back(u);
      pos.push_back(pos[u]);
      height.push_back(h);
      ++added;
    }
  }
  std::vector<std::size_t> perm(adj.size());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(std::span(perm), rng);
  Adjacency out(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v) {
    for (std::size_t u : adj[v]) out[perm[v]].push_back(perm[u]);
  }
  for (auto& nb : out) std::sort(nb.begin(), nb.end());
  return out;
}

namespace {

template <class R>
R pick_answer(const std::vector<R>& options, std::size_t right, double p, const std::string& adversary, Rng& rng) {
  if (options.size() == 1 || bernoulli(rng, p)) return options[right];
  if (adversary == "uniform") {
    std::size_t k = uniform_index(rng, options.size() - 1);
    if (k >= right) ++k;
    return options[k];
  }
  if (adversary == "fixed") return options[right == 0 ? 1 : 0];
  if (adversary == "fixed-largest") return options[right == options.size() - 1 ? options.size() - 2 : options.size() - 1];
  throw std::invalid_argument("unknown adversary: " + adversary);
}

}  // namespace

WalkResponse noisy_vertex_answer(const Adjacency& tree, const std::vector<std::size_t>& dist, std::size_t q, double p,
                                 const std::string& adversary, Rng& rng) {
  std::vector<WalkResponse> options{WalkResponse::here()};
  std::size_t right = 0;
  for (std::size_t u : tree[q]) {
    if (dist[u] + 1 == dist[q]) right = options.size();
    options.push_back(WalkResponse::toward_node(u));
  }
  return pick_answer(options, right, p, adversary, rng);
}

VertexResponse noisy_vertex_answer(const BinaryHierarchy& h, NodeId target, NodeId v, double p,
                                   const std::string& adversary, Rng& rng) {
  const VertexResponse truth = true_vertex_response(h, target, v);
  std::vector<VertexResponse> options{VertexResponse::here()};
  std::size_t right = 0;
  for (NodeId u : h.neighbors(v)) {
    if (truth == VertexResponse::toward_node(u)) right = options.size();
    options.push_back(VertexResponse::toward_node(u));
  }
  return pick_answer(options, right, p, adversary, rng);
}

std::size_t nonadaptive_trial(std::size_t n, std::size_t k, Rng& rng) {
  if (n < 8 || !is_power_of_two(n)) throw std::invalid_argument("n must be a power of two, at least 8");
  auto labels = default_labels(n);
  shuffle(std::span(labels), rng);
  const auto truth = balanced_hierarchy(labels);
  std::map<ElementId, std::size_t> cluster_of;
  std::size_t clusters = 0;
  for (NodeId v = 0; v < truth.node_count(); ++v) {
    const auto members = truth.cluster(v);
    if (members.size() != 4) continue;
    for (const auto& e : members) cluster_of[e] = clusters;
    ++clusters;
  }
  std::vector<std::size_t> id(n);
  const auto base = default_labels(n);
  for (std::size_t i = 0; i < n; ++i) id[i] = cluster_of.at(base[i]);

  std::vector<char> learned(clusters, 0);
  for (std::size_t q = 0; q < k; ++q) {
    const std::size_t a = uniform_index(rng, n);
    std::size_t b = uniform_index(rng, n - 1);
    if (b >= a) ++b;
    std::size_t c = uniform_index(rng, n - 2);
    for (std::size_t skip : {std::min(a, b), std::max(a, b)}) {
      if (c >= skip) ++c;
    }
    if (id[a] == id[b] && id[b] == id[c]) learned[id[a]] = 1;
  }
  return static_cast<std::size_t>(std::count(learned.begin(), learned.end(), 1));
}

double nonadaptive_experiment(std::size_t n, std::size_t k, std::size_t trials, Rng& rng) {
  if (trials == 0) throw std::invalid_argument("trials must be at least 1");
  double sum = 0;
  for (std::size_t t = 0; t < trials; ++t) sum += static_cast<double>(nonadaptive_trial(n, k, rng));
  return sum / static_cast<double>(trials);
}

double nonadaptive_bound(std::size_t n, std::size_t k) {
  return 6.0 * static_cast<double>(k) / (static_cast<double>(n - 1) * static_cast<double>(n - 2));
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit needs two or more points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

// Rank of target under top()'s order: heavier first, ties by smaller id.
std::size_t target_rank(const std::vector<double>& lw, NodeId target) {
  std::size_t rank = 0;
  for (NodeId u = 0; u < lw.size(); ++u) {
    if (lw[u] > lw[target] || (lw[u] == lw[target] && u < target)) ++rank;
  }
  return rank;
}

// containment[r][k] for one (p, n): one MW run per trial at the largest
// c_rounds, checked at every smaller round budget on the way.
std::vector<std::vector<double>> containment_grid(const CalibrationConfig& cfg, double p, std::size_t n, Rng& rng) {
  const auto& rg = cfg.rounds_grid;
  const auto& kg = cfg.keep_grid;
  std::vector<std::vector<std::size_t>> hits(rg.size(), std::vector<std::size_t>(kg.size(), 0));
  const double max_rounds = *std::max_element(rg.begin(), rg.end());
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto h = random_hierarchy(n, rng);
    const std::size_t nodes = h.node_count();
    const NodeId target = static_cast<NodeId>(uniform_index(rng, nodes));
    MultiplicativeWeights mw(h, MWConfig{p, cfg.delta, max_rounds, 1.0});
    std::vector<std::size_t> budget(rg.size()), keep(kg.size());
    for (std::size_t r = 0; r < rg.size(); ++r) budget[r] = MWConfig{p, cfg.delta, rg[r], 1.0}.rounds(nodes);
    for (std::size_t k = 0; k < kg.size(); ++k) keep[k] = MWConfig{p, cfg.delta, 1.0, kg[k]}.keep(nodes);
    auto check = [&](std::size_t round) {
      for (std::size_t r = 0; r < rg.size(); ++r) {
        if (budget[r] != round) continue;
        const std::size_t rank = target_rank(mw.log_weights(), target);
        for (std::size_t k = 0; k < kg.size(); ++k) hits[r][k] += rank < keep[k];
      }
    };
    check(0);
    while (!mw.done()) {
      const NodeId v = mw.query();
      mw.update(v, noisy_vertex_answer(h, target, v, p, "uniform", rng));
      check(mw.round());
    }
  }
  std::vector<std::vector<double>> out(rg.size(), std::vector<double>(kg.size()));
  for (std::size_t r = 0; r < rg.size(); ++r) {
    for (std::size_t k = 0; k < kg.size(); ++k) out[r][k] = hits[r][k] / static_cast<double>(cfg.trials);
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> first_passing(
    const std::vector<const std::vector<std::vector<double>>*>& grids, double need) {
  if (grids.empty()) return std::nullopt;
  const std::size_t R = grids.front()->size();
  const std::size_t K = R ? grids.front()->front().size() : 0;
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t k = 0; k < K; ++k) {
      bool ok = true;
      for (const auto* g : grids) ok = ok && (*g)[r][k] >= need;
      if (ok) return std::make_pair(r, k);
    }
  }
  return std::nullopt;
}

}  // namespace

CalibrationReport calibrate(const CalibrationConfig& cfg, const NoisyConstants& prior) {
  if (cfg.p_grid.empty() || cfg.n_grid.empty() || cfg.rounds_grid.empty() || cfg.keep_grid.empty() ||
      cfg.cost_n_grid.empty() || cfg.insertion_n_grid.empty()) {
    throw std::invalid_argument("calibration grids must not be empty");
  }
  if (cfg.trials == 0 || cfg.cost_trials == 0 || cfg.insertion_trials == 0) throw std::invalid_argument("trials must be at least 1");
  if (!std::is_sorted(cfg.rounds_grid.begin(), cfg.rounds_grid.end()) ||
      !std::is_sorted(cfg.keep_grid.begin(), cfg.keep_grid.end())) {
    throw std::invalid_argument("constant grids must be ascending");
  }
  for (double p : cfg.p_grid) {
    if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("p must lie in (0.5, 1]");
  }

  CalibrationReport report;
  report.config = cfg;
  const double need = 1 - cfg.delta + cfg.margin;
  std::vector<const std::vector<std::vector<double>>*> all;

  for (std::size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
    const double p = cfg.p_grid[pi];
    CalibrationRow row;
    row.p = p;
    row.k_p = p < 1.0 ? choose_kp(p) : 1;
    if (p < 1.0) row.lambda = mw_lambda(p);
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
      Rng rng = make_rng(derive_seed(cfg.seed, pi, cfg.n_grid[ni]));
      const auto grid = containment_grid(cfg, p, cfg.n_grid[ni], rng);
      if (row.containment.empty()) {
        row.containment = grid;
      } else {
        for (std::size_t r = 0; r < grid.size(); ++r) {
          for (std::size_t k = 0; k < grid[r].size(); ++k) {
            row.containment[r][k] = std::min(row.containment[r][k], grid[r][k]);
          }
        }
      }
    }
    report.rows.push_back(std::move(row));
  }
  for (auto& row : report.rows) {
    if (auto pick = first_passing({&row.containment}, need)) {
      row.c_rounds = cfg.rounds_grid[pick->first];
      row.c_keep = cfg.keep_grid[pick->second];
    }
    all.push_back(&row.containment);
  }
  const auto pick = first_passing(all, need);
  report.ok = pick.has_value();
  report.chosen = prior;
  if (pick) {
    report.chosen.c_rounds = cfg.rounds_grid[pick->first];
    report.chosen.c_keep = cfg.keep_grid[pick->second];
  }

  // Cost constants under the chosen (or prior) constants.
  for (std::size_t pi = 0; pi < report.rows.size(); ++pi) {
    auto& row = report.rows[pi];
    const auto rc = RobustConfig::make(row.p, cfg.delta, report.chosen);
    std::vector<double> xs, ys;
    for (std::size_t n : cfg.cost_n_grid) {
      Rng rng = make_rng(derive_seed(cfg.seed ^ 0x5a5a, pi, n));
      double sum = 0;
      for (std::size_t t = 0; t < cfg.cost_trials; ++t) {
        const auto inst = sibling_instance(TreeShape::Random, n, rng);
        NoisyOracle o(inst.truth, NoiseModel::uniform(row.p), rng());
        robust_find_sibling(inst.partial, inst.x, o, rc);
        sum += static_cast<double>(o.queries_used());
      }
      const double mean = sum / static_cast<double>(cfg.cost_trials);
      row.kappa = std::max(row.kappa, mean / (std::log2(double(n)) + std::log(1 / cfg.delta)));
      xs.push_back(std::log2(double(n)));
      ys.push_back(mean);
    }
    for (std::size_t n : cfg.insertion_n_grid) {
      Rng rng = make_rng(derive_seed(cfg.seed ^ 0xa5a5, pi, n));
      for (std::size_t t = 0; t < cfg.insertion_trials; ++t) {
        const auto truth = random_hierarchy(n, rng);
        const auto els = shuffled_elements(truth, rng);
        NoisyOracle o(truth, NoiseModel::uniform(row.p), rng());
        noisy_insertion_clustering(els, o, row.p, cfg.delta, report.chosen);
        const double scale = double(n) * (std::log2(double(n)) + std::log(double(n) / cfg.delta));
        row.kappa_prime = std::max(row.kappa_prime, static_cast<double>(o.queries_used()) / scale);
      }
    }
    if (xs.size() >= 2) row.kappa_slope = fit_line(xs, ys).slope;
    report.kappa = std::max(report.kappa, row.kappa);
    report.kappa_prime = std::max(report.kappa_prime, row.kappa_prime);
    report.kappa_slope = std::max(report.kappa_slope, row.kappa_slope);
  }
  return report;
}

nlohmann::json CalibrationReport::to_json() const {
  nlohmann::json j;
  j["c_rounds"] = chosen.c_rounds;
  j["c_keep"] = chosen.c_keep;
  j["ok"] = ok;
  j["kappa"] = kappa;
  j["kappa_prime"] = kappa_prime;
  j["kappa_slope"] = kappa_slope;
  j["delta"] = config.delta;
  j["margin"] = config.margin;
  j["trials"] = config.trials;
  j["seed"] = config.seed;
  j["n_grid"] = config.n_grid;
  j["rounds_grid"] = config.rounds_grid;
  j["keep_grid"] = config.keep_grid;
  j["cost_n_grid"] = config.cost_n_grid;
  j["cost_trials"] = config.cost_trials;
  j["insertion_n_grid"] = config.insertion_n_grid;
  j["insertion_trials"] = config.insertion_trials;
  auto& rows_j = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json rj;
    rj["p"] = r.p;
    rj["k_p"] = r.k_p;
    rj["lambda"] = r.lambda ? nlohmann::json(*r.lambda) : nlohmann::json(nullptr);
    rj["containment"] = r.containment;
    rj["c_rounds"] = r.c_rounds ? nlohmann::json(*r.c_rounds) : nlohmann::json(nullptr);
    rj["c_keep"] = r.c_keep ? nlohmann::json(*r.c_keep) : nlohmann::json(nullptr);
    rj["kappa"] = r.kappa;
    rj["kappa_prime"] = r.kappa_prime;
    rj["kappa_slope"] = r.kappa_slope;
    rows_j.push_back(rj);
  }
  return j;
}

std::string CalibrationReport::to_text() const {
  std::ostringstream out;
  out << "target containment >= " << fmt_fixed(1 - config.delta + config.margin, 3) << " (delta " << fmt(config.delta)
      << ", " << config.trials << " trials, worst over n in {";
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) out << (i ? "," : "") << config.n_grid[i];
  out << "} leaves)\n";
  for (const auto& r : rows) {
    out << "p " << fmt(r.p) << "  k_p " << r.k_p << "  lambda " << (r.lambda ? fmt_fixed(*r.lambda, 6) : "-")
        << "  c_rounds " << (r.c_rounds ? fmt(*r.c_rounds) : "none") << "  c_keep "
        << (r.c_keep ? fmt(*r.c_keep) : "none") << "  kappa " << fmt_fixed(r.kappa, 3) << "  kappa' "
        << fmt_fixed(r.kappa_prime, 3) << "  slope " << fmt_fixed(r.kappa_slope, 2) << '\n';
    out << "  rounds\\keep";
    for (double k : config.keep_grid) out << '\t' << fmt(k);
    out << '\n';
    for (std::size_t i = 0; i < r.containment.size(); ++i) {
      out << "  " << fmt(config.rounds_grid[i]);
      for (double c : r.containment[i]) out << '\t' << fmt_fixed(c, 3);
      out << '\n';
    }
  }
  out << (ok ? "chosen" : "no tested pair suffices; keeping prior") << ": c_rounds " << fmt(chosen.c_rounds)
      << ", c_keep " << fmt(chosen.c_keep) << "\n";
  out << "kappa " << fmt_fixed(kappa, 3) << "  kappa' " << fmt_fixed(kappa_prime, 3) << "  slope "
      << fmt_fixed(kappa_slope, 2) << '\n';
  return out.str();
}

}  // namespace hier
