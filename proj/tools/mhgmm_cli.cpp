// Command-line front end: simulate, fit, eval, experiment.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhgmm/errors.hpp"
#include "mhgmm/eval.hpp"
#include "mhgmm/io.hpp"
#include "mhgmm/pipeline.hpp"

namespace {

using namespace mhgmm;

struct RunFlags {
  RunConfig config;
  std::string criterion = "bic";
  std::string mode = "direct";
  int prune_target = -1;
  bool no_prune = false;
  std::uint64_t seed = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--splits,-B", f.config.splits, "number of random learn/estimate splits")->capture_default_str();
  cmd->add_option("--lambdas", f.config.lambdas, "temperature grid")->delimiter(',')->capture_default_str();
  cmd->add_option("--steps", f.config.steps, "chain length (states, initial one included)")->capture_default_str();
  cmd->add_option("--k0", f.config.k0, "initial number of clusters")->capture_default_str();
  cmd->add_option("--k-max", f.config.k_max, "largest number of clusters")->capture_default_str();
  cmd->add_option("--criterion", f.criterion, "temperature selection: aic or bic")->capture_default_str();
  cmd->add_option("--prune-target", f.prune_target, "active-variable target of the pruning phase (default ceil(d/3))");
  cmd->add_flag("--no-prune", f.no_prune, "disable the pruning phase");
  cmd->add_option("--window", f.config.window, "trailing states used to pick each chain's configuration")
      ->capture_default_str();
  cmd->add_option("--split-fraction", f.config.split_fraction, "share of observations in the learning part")
      ->capture_default_str();
  cmd->add_option("--prior-intensity", f.config.prior_intensity, "Poisson intensity of the cluster prior")
      ->capture_default_str();
  cmd->add_option("--mode", f.mode, "final clustering: direct, aggregated or both")->capture_default_str();
  cmd->add_option("--jobs,-j", f.config.jobs, "worker threads")->capture_default_str();
  cmd->add_option("--em-starts", f.config.fit.n_starts, "EM initializations per fit")->capture_default_str();
  cmd->add_option("--em-tol", f.config.fit.tol, "EM relative tolerance")->capture_default_str();
  cmd->add_option("--em-max-iter", f.config.fit.max_iter, "EM iteration cap")->capture_default_str();
}

RunConfig finish(const RunFlags& f) {
  RunConfig c = f.config;
  c.criterion = parse_criterion(f.criterion);
  c.mode = parse_clustering_mode(f.mode);
  c.prune = !f.no_prune;
  if (f.prune_target >= 0) c.prune_target = f.prune_target;
  c.seed = f.seed;
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"Sparse model-based clustering with a Metropolis-Hastings search over (K, S)"};
  app.set_config("--config", "", "read options from a key = value file");
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "write a simulated dataset as CSV");
  std::string sim_experiment = "illustrative";
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  bool sim_header = false;
  sim->add_option("--experiment,-e", sim_experiment, "illustrative, exp1 or exp2")->capture_default_str();
  sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
  sim->add_option("--out,-o", sim_out, "output CSV (stdout when omitted)");
  sim->add_flag("--header", sim_header, "write a header row");

  // fit
  auto* fit = app.add_subcommand("fit", "run the full selection and clustering pipeline");
  RunFlags fit_flags;
  std::string fit_input;
  std::string fit_simulate;
  std::string fit_out = "mhgmm-out";
  bool fit_header = false;
  bool fit_labels = false;
  auto* input_opt = fit->add_option("--input,-i", fit_input, "input CSV");
  auto* simulate_opt = fit->add_option("--simulate", fit_simulate, "use a simulated dataset instead of --input");
  input_opt->excludes(simulate_opt);
  fit->add_flag("--header", fit_header, "input has a header row");
  fit->add_flag("--labels", fit_labels, "last input column holds true labels");
  fit->add_option("--out-dir,-o", fit_out, "output directory")->capture_default_str();
  fit->add_option("--seed", fit_flags.seed, "master seed")->capture_default_str();
  add_run_flags(fit, fit_flags);

  // eval
  auto* ev = app.add_subcommand("eval", "adjusted Rand index between two label files");
  std::string eval_a;
  std::string eval_b;
  ev->add_option("first", eval_a, "label file")->required();
  ev->add_option("second", eval_b, "label file")->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "replicate a simulated experiment and tabulate the results");
  RunFlags exp_flags;
  std::string exp_id = "exp2";
  int replications = 10;
  int hellinger_draws = 0;
  std::string exp_out;
  exp->add_option("--experiment,-e", exp_id, "illustrative, exp1 or exp2")->capture_default_str();
  exp->add_option("--replications,-r", replications, "number of simulated datasets")->capture_default_str();
  exp->add_option("--seed", exp_flags.seed, "master seed")->required();
  exp->add_option("--hellinger-draws", hellinger_draws, "Monte-Carlo draws for the Hellinger risk (0 = off)")
      ->capture_default_str();
  exp->add_option("--out-dir,-o", exp_out, "write table.csv and summary.json here");
  add_run_flags(exp, exp_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*sim) {
    const Dataset ds = simulate(parse_experiment_id(sim_experiment), sim_seed);
    if (sim_out.empty()) {
      write_csv(std::cout, ds, CsvOptions{sim_header, true});
    } else {
      std::ofstream out(sim_out);
      if (!out) throw DataError("cannot write '" + sim_out + "'");
      write_csv(out, ds, CsvOptions{sim_header, true});
    }
    return 0;
  }

  if (*fit) {
    const RunConfig cfg = finish(fit_flags);
    Dataset ds;
    if (!fit_simulate.empty())
      ds = simulate(parse_experiment_id(fit_simulate), cfg.seed);
    else if (!fit_input.empty())
      ds = read_csv_file(fit_input, CsvOptions{fit_header, fit_labels});
    else
      throw ConfigError("fit needs --input or --simulate");
    const PipelineReport report = run_pipeline(ds, cfg);
    write_pipeline_outputs(report, ds, fit_out);
    std::cout << "eta_hat: " << to_string(report.vote.config) << "\n";
    if (report.ari_direct) std::cout << "ARI (direct): " << *report.ari_direct << "\n";
    if (report.ari_aggregated) std::cout << "ARI (aggregated): " << *report.ari_aggregated << "\n";
    std::cout << "outputs written to " << fit_out << "\n";
    return 0;
  }

  if (*ev) {
    std::cout << ari(read_label_file(eval_a), read_label_file(eval_b)) << "\n";
    return 0;
  }

  if (*exp) {
    const RunConfig cfg = finish(exp_flags);
    ExperimentOptions opts;
    opts.replications = replications;
    opts.seed = exp_flags.seed;
    opts.hellinger_draws = hellinger_draws;
    const ExperimentTable table = run_experiment(parse_experiment_id(exp_id), cfg, opts);
    const auto summary = experiment_to_json(table);
    if (!exp_out.empty()) {
      std::filesystem::create_directories(exp_out);
      std::ofstream csv(std::filesystem::path(exp_out) / "table.csv");
      write_experiment_csv(table, csv);
      std::ofstream js(std::filesystem::path(exp_out) / "summary.json");
      js << summary.dump(2) << "\n";
    }
    write_experiment_csv(table, std::cout);
    std::cout << "K histogram:";
    const auto hist = table.k_histogram();
    for (std::size_t k = 1; k < hist.size(); ++k) std::cout << " K=" << k << ":" << hist[k];
    std::cout << "\nmean true actives: " << table.mean_true_active()
              << "\nmean false actives: " << table.mean_false_active()
              << "\nmedian ARI (direct): " << table.median_ari() << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mhgmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mhgmm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const mhgmm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
