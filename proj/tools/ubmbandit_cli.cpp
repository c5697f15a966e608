// Command-line front end for weight fitting, feature extraction, online
// simulation and offline replay experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ubmbandit/config.hpp"
#include "ubmbandit/csv.hpp"
#include "ubmbandit/em.hpp"
#include "ubmbandit/experiment.hpp"
#include "ubmbandit/features.hpp"
#include "ubmbandit/matrix_io.hpp"
#include "ubmbandit/rng.hpp"
#include "ubmbandit/session_log.hpp"
#include "ubmbandit/svd.hpp"
#include "ubmbandit/world.hpp"

namespace fs = std::filesystem;
using namespace ubmbandit;

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

void apply_globals(const GlobalFlags& g, ExperimentConfig& config) {
  if (g.seed) config.seed = *g.seed;
  if (g.threads) config.threads = *g.threads;
  if (g.out) config.output_dir = *g.out;
}

int fit_weights(const std::string& log_path, int k, const std::string& out_path, const EmOptions& opts) {
  const auto log = load_session_log(log_path);
  const auto fit = em_fit_ubm(log, k, opts);
  save_weights(out_path, fit.weights);
  std::fprintf(stderr, "em: %d iterations, log-likelihood %.6f, %s\n", fit.iterations, fit.log_likelihood,
               fit.converged ? "converged" : "iteration cap reached");
  for (const auto& w : fit.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::fprintf(stderr, "wrote %s\n", out_path.c_str());
  return 0;
}

int svd_features(const std::string& log_path, int rank, const std::string& out_path,
                 const std::string& weights_path, const SvdOptions& svd_opts, const EmOptions& em_opts) {
  const auto log = load_session_log(log_path);
  PositionWeights weights;
  if (weights_path.empty()) {
    int k = 0;
    for (const auto& s : log) k = std::max(k, static_cast<int>(s.displayed.size()));
    weights = em_fit_ubm(log, k, em_opts).weights;
    std::fprintf(stderr, "no --weights given; fitted UBM weights by EM (K=%d)\n", k);
  } else {
    weights = load_weights(weights_path);
  }
  const auto m = build_attractiveness_matrix(log, weights);
  const auto fact = truncated_svd(m.values, rank, svd_opts);
  save_factorization(out_path, fact);

  nlohmann::json vocab;
  vocab["users"] = m.users;
  vocab["items"] = m.items;
  vocab["rank"] = fact.rank();
  vocab["clamped_entries"] = m.clamped;
  const auto vocab_path = out_path + ".vocab.json";
  std::ofstream(vocab_path) << vocab.dump(1) << '\n';
  std::fprintf(stderr, "%zu users x %zu items, %zu entries clamped to 1; wrote %s and %s\n", m.users.size(),
               m.items.size(), m.clamped, out_path.c_str(), vocab_path.c_str());
  return 0;
}

int run_config(ExperimentConfig config) {
  config.validate();
  switch (config.mode) {
    case ExperimentMode::kFitWeights: {
      EmOptions opts;
      opts.max_iterations = config.em.max_iterations;
      opts.tolerance = config.em.tolerance;
      fs::create_directories(config.output_dir);
      return fit_weights(config.replay.log, config.list_lengths.at(0),
                         (fs::path(config.output_dir) / "weights.json").string(), opts);
    }
    case ExperimentMode::kSvdFeatures: {
      SvdOptions svd;
      svd.oversampling = config.replay.oversampling;
      svd.power_iterations = config.replay.power_iterations;
      svd.seed = derive_seed(config.seed, "svd", 0);
      fs::create_directories(config.output_dir);
      return svd_features(config.replay.log, config.replay.rank,
                          (fs::path(config.output_dir) / "fact.bin").string(), config.weights.path, svd, {});
    }
    default:
      break;
  }
  RunHooks hooks;
  hooks.on_run = [](const RunReport& r) {
    if (r.ok()) {
      const auto& last = r.checkpoints.back();
      std::fprintf(stderr, "%-11s K=%d seed=%llu  t=%llu ctr_sum=%.4f ctr_set=%.4f  (%.1fs)\n", r.algorithm.c_str(),
                   r.list_length, static_cast<unsigned long long>(r.seed),
                   static_cast<unsigned long long>(last.t), last.ctr_sum, last.ctr_set, r.wall_seconds);
    } else {
      std::fprintf(stderr, "%-11s K=%d seed=%llu  FAILED: %s\n", r.algorithm.c_str(), r.list_length,
                   static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
  };
  const auto reports = run_experiment(config, hooks);
  std::size_t failed = 0;
  for (const auto& r : reports) failed += r.ok() ? 0 : 1;
  std::fprintf(stderr, "%zu runs, %zu failed; outputs in %s\n", reports.size(), failed, config.output_dir.c_str());
  return failed == 0 ? 0 : 1;
}

int report(const std::string& run_dir) {
  const auto path = fs::path(run_dir) / "runs.csv";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const auto reports = read_runs_csv(in);
  const auto rows = aggregate(reports);

  std::printf("%-11s %3s %8s %4s %-21s %-21s %-21s %s\n", "algorithm", "K", "t", "runs", "ctr_sum (+-se)",
              "ctr_set (+-se)", "regret (+-se)", "bound");
  for (const auto& r : rows) {
    char regret[64] = "-";
    char bound[32] = "-";
    if (r.regret_mean) std::snprintf(regret, sizeof regret, "%.2f +-%.2f", *r.regret_mean, *r.regret_se);
    if (r.bound) std::snprintf(bound, sizeof bound, "%.1f", *r.bound);
    std::printf("%-11s %3d %8llu %4zu %.5f +-%.5f     %.5f +-%.5f     %-21s %s\n", r.algorithm.c_str(),
                r.list_length, static_cast<unsigned long long>(r.t), r.runs, r.ctr_sum_mean, r.ctr_sum_se,
                r.ctr_set_mean, r.ctr_set_se, regret, bound);
  }
  try {
    const auto table = compare_table(reports);
    std::printf("\nlift over %s at the final checkpoint (%%)\n%-11s", table.baseline.c_str(), "algorithm");
    for (int k : table.list_lengths) std::printf("  K=%-2d ctr_sum         ctr_set        ", k);
    std::printf("\n");
    for (const auto& a : table.algorithms) {
      std::printf("%-11s", a.c_str());
      for (int k : table.list_lengths) {
        const auto& e = table.at(a, k);
        std::printf("  %.4f (%+6.2f)  %.4f (%+6.2f) ", e.ctr_sum, e.ctr_sum_lift_pct, e.ctr_set,
                    e.ctr_set_lift_pct);
      }
      std::printf("\n");
    }
  } catch (const std::invalid_argument& e) {
    std::printf("\nno lift table: %s\n", e.what());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position-bias-aware contextual bandits: simulation, weight fitting and offline replay"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  GlobalFlags globals;
  bool dump = false;
  app.add_option("--seed", globals.seed, "Master seed (overrides the config)");
  app.add_option("--threads", globals.threads, "Worker threads, 0 = all cores (overrides the config)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", globals.out, "Output directory (overrides the config)");
  app.add_flag("--dump-defaults", dump, "Print the default experiment config and exit");

  EmOptions em_opts;

  auto* fit = app.add_subcommand("fit-weights", "Fit UBM examination weights by EM");
  std::string fit_log;
  std::string fit_out = "weights.json";
  int fit_k = 10;
  fit->add_option("log", fit_log, "Session log (TSV)")->required()->check(CLI::ExistingFile);
  fit->add_option("--k", fit_k, "List length K")->check(CLI::PositiveNumber);
  fit->add_option("-o,--output", fit_out, "Weights JSON to write");
  fit->add_option("--max-iterations", em_opts.max_iterations)->check(CLI::PositiveNumber);
  fit->add_option("--tolerance", em_opts.tolerance)->check(CLI::NonNegativeNumber);

  auto* svd = app.add_subcommand("svd-features", "Attractiveness matrix and truncated SVD features");
  std::string svd_log;
  std::string svd_out = "fact.bin";
  std::string svd_weights;
  int svd_rank = 10;
  SvdOptions svd_opts;
  svd->add_option("log", svd_log, "Session log (TSV)")->required()->check(CLI::ExistingFile);
  svd->add_option("--rank", svd_rank, "Factorization rank")->check(CLI::PositiveNumber);
  svd->add_option("-o,--output", svd_out, "Factorization file to write");
  svd->add_option("--weights", svd_weights, "Weights JSON (fitted by EM when omitted)")->check(CLI::ExistingFile);
  svd->add_option("--oversampling", svd_opts.oversampling)->check(CLI::NonNegativeNumber);
  svd->add_option("--power-iterations", svd_opts.power_iterations)->check(CLI::NonNegativeNumber);

  auto* sim = app.add_subcommand("simulate", "Run the experiment described by a config file");
  std::string sim_config;
  sim->add_option("--config", sim_config, "Experiment config")->required()->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("replay", "Offline UBM-IPS replay of a session log");
  std::string rep_config;
  std::string rep_log;
  std::string rep_weights;
  rep->add_option("--config", rep_config, "Experiment config")->required()->check(CLI::ExistingFile);
  rep->add_option("--log", rep_log, "Session log (TSV)")->required()->check(CLI::ExistingFile);
  rep->add_option("--weights", rep_weights, "Weights JSON")->required()->check(CLI::ExistingFile);

  auto* rpt = app.add_subcommand("report", "Summarize a finished run directory");
  std::string rpt_dir;
  rpt->add_option("run-dir", rpt_dir)->required()->check(CLI::ExistingDirectory);

  auto* gen = app.add_subcommand("generate-log", "Write a synthetic multi-user UBM session log");
  LogSpec log_spec;
  double gen_decay = 0.85;
  std::string gen_out = "log.tsv";
  gen->add_option("--users", log_spec.users)->check(CLI::PositiveNumber);
  gen->add_option("--items", log_spec.items)->check(CLI::PositiveNumber);
  gen->add_option("--candidates", log_spec.candidates)->check(CLI::PositiveNumber);
  gen->add_option("--k", log_spec.list_length)->check(CLI::PositiveNumber);
  gen->add_option("--sessions", log_spec.sessions)->check(CLI::PositiveNumber);
  gen->add_option("--decay", gen_decay, "Geometric examination decay")->check(CLI::Range(0.0, 1.0));
  gen->add_option("-o,--output", gen_out);

  auto* yx = app.add_subcommand("yandex-convert", "Convert a Yandex relevance-prediction log to session TSV");
  std::string yx_in;
  std::string yx_out = "log.tsv";
  YandexAdapterOptions yx_opts;
  yx->add_option("input", yx_in)->required()->check(CLI::ExistingFile);
  yx->add_option("-o,--output", yx_out);
  yx->add_option("--max-k", yx_opts.max_list_length)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump) {
      std::cout << dump_defaults();
      return 0;
    }
    if (*fit) return fit_weights(fit_log, fit_k, fit_out, em_opts);
    if (*svd) {
      svd_opts.seed = derive_seed(globals.seed.value_or(ExperimentConfig{}.seed), "svd", 0);
      return svd_features(svd_log, svd_rank, svd_out, svd_weights, svd_opts, em_opts);
    }
    if (*sim) {
      auto config = load_config(sim_config);
      apply_globals(globals, config);
      return run_config(config);
    }
    if (*rep) {
      auto config = load_config(rep_config);
      config.mode = ExperimentMode::kReplay;
      config.replay.log = rep_log;
      config.weights.path = rep_weights;
      config.weights.source = "file";
      apply_globals(globals, config);
      return run_config(config);
    }
    if (*rpt) return report(rpt_dir);
    if (*gen) {
      const auto weights = PositionWeights::geometric(log_spec.list_length, gen_decay);
      const auto log = generate_session_log(log_spec, weights, globals.seed.value_or(1));
      save_session_log(gen_out, log.sessions);
      std::fprintf(stderr, "wrote %zu sessions to %s\n", log.sessions.size(), gen_out.c_str());
      return 0;
    }
    if (*yx) {
      std::ifstream in(yx_in);
      std::ofstream out(yx_out);
      const auto n = convert_yandex_log(in, out, yx_opts);
      std::fprintf(stderr, "wrote %zu sessions to %s\n", n, yx_out.c_str());
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
