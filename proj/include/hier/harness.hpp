#pragma once

// Seeded experiment runner: trial records, CSV output, summaries, constant
// calibration for the noisy pipeline and the non-adaptive sampling experiment.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hier/hierarchy.hpp"
#include "hier/noisy.hpp"
#include "hier/rng.hpp"
#include "json.hpp"

namespace hier {

inline constexpr const char* kCsvSchema = "# hier-results v1";

enum class TreeShape { Random, Caterpillar, Balanced };

TreeShape parse_tree_shape(const std::string& s);
const char* to_string(TreeShape s);
BinaryHierarchy make_truth(TreeShape shape, std::size_t n, Rng& rng);

struct ExperimentConfig {
  std::string experiment;
  std::vector<std::size_t> n_values;
  std::size_t trials = 100;
  std::optional<double> p;
  std::optional<double> delta;
  std::string adversary = "uniform";
  std::uint64_t seed = 1;
  TreeShape tree_shape = TreeShape::Random;
  std::string output_path;
  // Query budget for the non-adaptive experiment.
  std::size_t k = 100;
  NoisyConstants constants;

  // Throws std::invalid_argument on an unknown experiment or bad values.
  void validate() const;
  // Keys mirror the command-line flags ("experiment", "n", "trials", ...).
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Registered experiment names, in display order.
const std::vector<std::string>& experiment_names();

struct TrialRecord {
  std::string experiment;
  std::size_t n = 0;
  std::size_t trial = 0;
  bool success = false;
  std::uint64_t ordinal_queries = 0;
  std::optional<std::uint64_t> vertex_queries;
  std::optional<std::uint64_t> iterations;
  // Experiment-specific value: mean partition rounds, candidate count,
  // learned clusters.
  std::optional<double> metric;
  double wall_time = 0;  // seconds; kept out of the CSV
};

struct Proportion {
  double rate = 0;
  double low = 0;
  double high = 0;
};

// 95% Wilson score interval.
Proportion wilson_interval(std::size_t successes, std::size_t trials);

struct SummaryRow {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  Proportion success;
  double mean_queries = 0;
  std::uint64_t max_queries = 0;
  double sd_queries = 0;
  std::optional<double> mean_vertex_queries;
  std::optional<double> mean_iterations;
  std::optional<double> mean_metric;
  std::optional<double> sd_metric;
  double wall_time = 0;
};

struct RunResult {
  ExperimentConfig config;
  std::vector<TrialRecord> records;  // sorted by (n, trial)
  std::vector<SummaryRow> summary;
};

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t n, std::size_t trial);
RunResult run(const ExperimentConfig& cfg);
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

std::string to_csv(const std::vector<TrialRecord>& records);
void write_csv(const std::vector<TrialRecord>& records, const std::string& path);
std::string format_summary(const RunResult& result, bool timing = false);

// Random tree on D + 1 + extra nodes with diameter exactly D: a spine path
// plus pendant nodes that never lengthen it, under a random relabelling.
Adjacency random_tree_with_diameter(std::size_t diameter, std::size_t extra, Rng& rng);

// Vertex-query answer that is right with probability p; wrong answers are
// uniform over the other options ("uniform") or the first other option
// ("fixed"). dist holds distances to the target.
WalkResponse noisy_vertex_answer(const Adjacency& tree, const std::vector<std::size_t>& dist, std::size_t q,
                                 double p, const std::string& adversary, Rng& rng);

// Same, for a vertex of a hierarchy.
VertexResponse noisy_vertex_answer(const BinaryHierarchy& h, NodeId target, NodeId v, double p,
                                   const std::string& adversary, Rng& rng);

// Full binary truth over n = 2^j permuted leaves, k uniform triplets; counts
// size-4 clusters with some sampled triplet entirely inside.
std::size_t nonadaptive_trial(std::size_t n, std::size_t k, Rng& rng);
double nonadaptive_experiment(std::size_t n, std::size_t k, std::size_t trials, Rng& rng);
// 6k / ((n-1)(n-2))
double nonadaptive_bound(std::size_t n, std::size_t k);

struct CalibrationConfig {
  std::vector<double> p_grid{0.7, 0.8, 0.9, 1.0};
  std::vector<std::size_t> n_grid{64, 256};
  std::size_t trials = 200;
  double delta = 0.05;
  std::vector<double> rounds_grid{1, 1.5, 2, 3, 4, 6, 8};
  std::vector<double> keep_grid{1, 1.5, 2, 3, 4};
  // Required containment is 1 - delta + margin at every grid point.
  double margin = 0.02;
  // Partial-tree sizes and trials for the sibling-search cost constants.
  std::vector<std::size_t> cost_n_grid{16, 32, 64, 128, 256};
  std::size_t cost_trials = 100;
  // Element counts and trials for the insertion cost constant.
  std::vector<std::size_t> insertion_n_grid{16, 64};
  std::size_t insertion_trials = 20;
  std::uint64_t seed = 7;
};

struct CalibrationRow {
  double p = 0;
  int k_p = 1;
  std::optional<double> lambda;
  // containment[r][k] over rounds_grid x keep_grid (worst n).
  std::vector<std::vector<double>> containment;
  std::optional<double> c_rounds;
  std::optional<double> c_keep;
  double kappa = 0;
  double kappa_prime = 0;
  double kappa_slope = 0;
};

struct CalibrationReport {
  CalibrationConfig config;
  std::vector<CalibrationRow> rows;
  bool ok = false;
  NoisyConstants chosen;
  // Ordinal queries per sibling search / (log2 n + ln(1/delta)), worst mean over n.
  double kappa = 0;
  // Insertion total / (n (log2 n + ln(n/delta))), worst trial.
  double kappa_prime = 0;
  // Slope of mean sibling-search queries against log2 n over cost_n_grid.
  double kappa_slope = 0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

CalibrationReport calibrate(const CalibrationConfig& cfg, const NoisyConstants& prior = {});

// Least-squares fit y = a + b x.
struct LinearFit {
  double intercept = 0;
  double slope = 0;
  double r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hier
