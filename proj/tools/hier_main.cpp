// hier: experiment runner, calibration, one-off reconstruction and the
// session server.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hier/harness.hpp"
#include "hier/io.hpp"
#include "hier/noiseless.hpp"
#include "hier/noisy.hpp"
#include "hier/session.hpp"

using namespace hier;

namespace {

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

NoisyConstants constants_from(const std::string& path) {
  return path.empty() ? NoisyConstants::calibrated() : NoisyConstants::load(path);
}

struct RunFlags {
  std::string config;
  std::string experiment;
  std::vector<std::size_t> n;
  std::size_t trials = 0;
  double p = 0, delta = 0;
  std::string adversary, shape, out, constants;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  bool timing = false;
};

int cmd_run(CLI::App& app, const RunFlags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config.empty()) j = nlohmann::json::parse(read_text(f.config));
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (!j.contains("constants")) cfg.constants = NoisyConstants::calibrated();
  bool timing = j.value("timing", false);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--experiment")) cfg.experiment = f.experiment;
  if (given("--n")) cfg.n_values = f.n;
  if (given("--trials")) cfg.trials = f.trials;
  if (given("--p")) cfg.p = f.p;
  if (given("--delta")) cfg.delta = f.delta;
  if (given("--adversary")) cfg.adversary = f.adversary;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--shape")) cfg.tree_shape = parse_tree_shape(f.shape);
  if (given("--out")) cfg.output_path = f.out;
  if (given("--k")) cfg.k = f.k;
  if (given("--constants")) cfg.constants = NoisyConstants::load(f.constants);
  if (given("--timing")) timing = f.timing;
  const auto result = run(cfg);
  std::cout << format_summary(result, timing);
  if (!cfg.output_path.empty()) std::cout << "wrote " << result.records.size() << " rows to " << cfg.output_path << '\n';
  return 0;
}

struct CalibrateFlags {
  CalibrationConfig cfg;
  std::string constants_in, out, report;
};

int cmd_calibrate(const CalibrateFlags& f) {
  const auto report = calibrate(f.cfg, constants_from(f.constants_in));
  std::cout << report.to_text();
  if (!f.report.empty()) write_text(f.report, report.to_json().dump(2) + "\n");
  if (!f.out.empty()) {
    nlohmann::json c{{"c_rounds", report.chosen.c_rounds},
                     {"c_keep", report.chosen.c_keep},
                     {"calibrated", report.ok},
                     {"kappa", report.kappa},
                     {"kappa_prime", report.kappa_prime},
                     {"kappa_slope", report.kappa_slope},
                     {"delta", f.cfg.delta},
                     {"trials", f.cfg.trials},
                     {"seed", f.cfg.seed}};
    write_text(f.out, c.dump(2) + "\n");
    std::cout << "wrote " << f.out << '\n';
  }
  return report.ok ? 0 : 2;
}

struct ReconstructFlags {
  std::string newick, algorithm = "insertion", out, constants, trace, adversary = "uniform";
  double p = 0.8, delta = 0.1;
  std::uint64_t seed = 1;
  bool shuffle_order = false;
};

int cmd_reconstruct(const ReconstructFlags& f) {
  const auto truth = from_newick(read_text(f.newick));
  Rng rng = make_rng(f.seed);
  auto els = truth.elements();
  if (f.shuffle_order) shuffle(std::span(els), rng);

  BinaryHierarchy out;
  std::uint64_t queries = 0;
  if (f.algorithm == "insertion") {
    ExactOracle o(truth);
    out = insertion_clustering(els, o);
    queries = o.queries_used();
  } else if (f.algorithm == "quick") {
    ExactOracle o(truth);
    out = quick_clustering(els, o, rng);
    queries = o.queries_used();
  } else if (f.algorithm == "noisy") {
    NoisyOracle o(truth, parse_noise_model(f.adversary, f.p), rng());
    const auto constants = constants_from(f.constants);
    if (f.trace.empty()) {
      out = noisy_insertion_clustering(els, o, f.p, f.delta, constants);
    } else {
      // Same loop as noisy_insertion_clustering, keeping each walk trace.
      std::ofstream trace(f.trace);
      if (!trace) throw std::runtime_error("cannot write " + f.trace);
      trace << "insertion,iteration,q,response,counter,potential\n";
      const auto cfg = RobustConfig::make(f.p, f.delta / static_cast<double>(els.size()), constants);
      out = els.size() == 1 ? BinaryHierarchy(els[0]) : BinaryHierarchy::pair(els[0], els[1]);
      for (std::size_t i = 2; i < els.size(); ++i) {
        const NodeId target = true_sibling(truth, out, els[i]);
        RobustSiblingSearch search(out, cfg, target);
        while (!search.done()) search.apply(pivot_query(o, out, search.pivot(), els[i]));
        if (const auto* w = search.walker()) {
          std::istringstream rows(w->trace_csv());
          std::string line;
          std::getline(rows, line);
          while (std::getline(rows, line)) trace << i << ',' << line << '\n';
        }
        out.insert_sibling(search.result(), els[i]);
      }
    }
    queries = o.queries_used();
  } else {
    throw std::invalid_argument("unknown algorithm: " + f.algorithm);
  }

  const std::string text = to_newick(out) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else {
    write_text(f.out, text);
  }
  std::cerr << "queries " << queries << "  equivalent " << (equivalent(out, truth) ? "yes" : "no") << '\n';
  return 0;
}

SessionServer* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& store_dir) {
  SessionStore store(store_dir);
  SessionServer server(store);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << host << ':' << port;
  if (!store_dir.empty()) std::cout << "  store " << store_dir;
  std::cout << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ':' << port << '\n';
    return 1;
  }
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical clustering from triplet queries"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "Run a seeded experiment and write per-trial CSV");
  run_cmd->add_option("--config", rf.config, "JSON file with the same keys as the flags; flags win");
  run_cmd->add_option("--experiment", rf.experiment, "Experiment name")
      ->check(CLI::IsMember(experiment_names()));
  run_cmd->add_option("--n", rf.n, "Sizes (diameters for tree-walk, leaves for mw-reduce)");
  run_cmd->add_option("--trials", rf.trials, "Trials per size")->check(CLI::PositiveNumber);
  run_cmd->add_option("--p", rf.p, "Answer accuracy in (0.5, 1]");
  run_cmd->add_option("--delta", rf.delta, "Failure probability");
  run_cmd->add_option("--adversary", rf.adversary, "uniform | fixed | fixed-largest");
  run_cmd->add_option("--seed", rf.seed, "Master seed");
  run_cmd->add_option("--shape", rf.shape, "random | caterpillar | balanced");
  run_cmd->add_option("--out", rf.out, "CSV output path");
  run_cmd->add_option("--k", rf.k, "Query budget for nonadaptive-lb");
  run_cmd->add_option("--constants", rf.constants, "Noisy constants JSON");
  run_cmd->add_flag("--timing", rf.timing, "Print wall time per size");

  CalibrateFlags cf;
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate c_rounds and c_keep and report the cost constants");
  cal_cmd->add_option("--p", cf.cfg.p_grid, "Accuracy grid");
  cal_cmd->add_option("--n", cf.cfg.n_grid, "Leaf counts for containment");
  cal_cmd->add_option("--trials", cf.cfg.trials, "Trials per (p, n)");
  cal_cmd->add_option("--delta", cf.cfg.delta, "Target failure probability");
  cal_cmd->add_option("--rounds", cf.cfg.rounds_grid, "c_rounds grid, ascending");
  cal_cmd->add_option("--keep", cf.cfg.keep_grid, "c_keep grid, ascending");
  cal_cmd->add_option("--margin", cf.cfg.margin, "Required containment above 1 - delta");
  cal_cmd->add_option("--cost-n", cf.cfg.cost_n_grid, "Partial-tree sizes for the sibling-search cost");
  cal_cmd->add_option("--cost-trials", cf.cfg.cost_trials, "Trials per sibling-search cost point");
  cal_cmd->add_option("--insertion-n", cf.cfg.insertion_n_grid, "Element counts for the insertion cost");
  cal_cmd->add_option("--insertion-trials", cf.cfg.insertion_trials, "Trials per insertion cost point");
  cal_cmd->add_option("--seed", cf.cfg.seed, "Seed");
  cal_cmd->add_option("--prior", cf.constants_in, "Constants kept when nothing passes");
  cal_cmd->add_option("--out", cf.out, "Write the chosen constants here");
  cal_cmd->add_option("--report", cf.report, "Write the full report as JSON");

  ReconstructFlags xf;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Rebuild a Newick truth from simulated answers");
  rec_cmd->add_option("--newick", xf.newick, "Truth in Newick ('-' for stdin)")->required();
  rec_cmd->add_option("--algorithm", xf.algorithm, "quick | insertion | noisy")
      ->check(CLI::IsMember({"quick", "insertion", "noisy"}));
  rec_cmd->add_option("--p", xf.p, "Answer accuracy (noisy)");
  rec_cmd->add_option("--delta", xf.delta, "Failure probability (noisy)");
  rec_cmd->add_option("--adversary", xf.adversary, "uniform | fixed | fixed-largest");
  rec_cmd->add_option("--seed", xf.seed, "Seed");
  rec_cmd->add_option("--constants", xf.constants, "Noisy constants JSON");
  rec_cmd->add_flag("--shuffle", xf.shuffle_order, "Insert in a seeded random order");
  rec_cmd->add_option("--out", xf.out, "Output Newick path (default stdout)");
  rec_cmd->add_option("--trace", xf.trace, "Debug: per-iteration walk trace CSV (noisy)");

  std::string host = "127.0.0.1", store_dir;
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the session API");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--store", store_dir, "Directory for session snapshots");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(*run_cmd, rf);
    if (*cal_cmd) return cmd_calibrate(cf);
    if (*rec_cmd) return cmd_reconstruct(xf);
    if (*serve_cmd) return cmd_serve(host, port, store_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
