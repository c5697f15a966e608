#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ubmbandit/config.hpp"

namespace ubmbandit {

struct CheckpointMetrics {
  std::uint64_t t = 0;
  double ctr_sum = 0.0;  // cumulative mean clicks per round
  double ctr_set = 0.0;  // cumulative fraction of rounds with a click
  std::optional<double> regret;            // synthetic mode only
  std::optional<double> bound;             // UBM-LinUCB in synthetic mode
  std::optional<double> bound_no_failure;  // same bound without the +1 term
};

struct RunReport {
  std::string algorithm;
  int list_length = 0;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;  // value from ExperimentConfig::seeds
  std::vector<CheckpointMetrics> checkpoints;
  double wall_seconds = 0.0;
  std::string snapshot_path;
  std::uint64_t skipped_rounds = 0;  // replay propensity misses
  std::string error;                 // non-empty when the run failed

  bool ok() const { return error.empty(); }
};

struct SummaryRow {
  std::string algorithm;
  int list_length = 0;
  std::uint64_t t = 0;
  std::size_t runs = 0;
  double ctr_sum_mean = 0.0;
  double ctr_sum_se = 0.0;
  double ctr_set_mean = 0.0;
  double ctr_set_se = 0.0;
  std::optional<double> regret_mean;
  std::optional<double> regret_se;
  std::optional<double> bound;
};

struct RunHooks {
  // Called from worker threads as each run finishes.
  std::function<void(const RunReport&)> on_run;
  bool write_outputs = true;
};

// Executes every (K, algorithm, seed) triple on a bounded worker pool. Each
// run draws from its own substream derive_seed(seed, "<algorithm>/K<k>", s),
// so results do not depend on the thread count. Failed runs are returned
// with `error` set. Unless disabled, writes runs.csv, summary.csv,
// compare.csv (when a c2ucb baseline is present), runs.json and the
// effective config into config.output_dir.
std::vector<RunReport> run_experiment(const ExperimentConfig& config, const RunHooks& hooks = {});

// Mean and standard error across successful seeds, per (algorithm, K, t).
std::vector<SummaryRow> aggregate(const std::vector<RunReport>& reports);

struct LiftEntry {
  double ctr_sum = 0.0;
  double ctr_sum_lift_pct = 0.0;
  double ctr_set = 0.0;
  double ctr_set_lift_pct = 0.0;
};

// Seed-mean CTRs at the final common checkpoint with percentage lift over
// the baseline: 100 * (ctr / baseline_ctr - 1).
struct LiftTable {
  std::string baseline;
  std::vector<int> list_lengths;
  std::vector<std::string> algorithms;
  std::map<int, std::uint64_t> horizon;  // checkpoint used per K
  std::map<std::string, std::map<int, LiftEntry>> entries;

  const LiftEntry& at(const std::string& algorithm, int k) const { return entries.at(algorithm).at(k); }
};

// Throws std::invalid_argument with fewer than two algorithms, a missing
// baseline, or runs of one K whose checkpoint lists differ.
LiftTable compare_table(const std::vector<RunReport>& reports, const std::string& baseline = "c2ucb");

// Columns: algorithm, then per K: K<k>_ctr_sum, K<k>_ctr_sum_lift_pct,
// K<k>_ctr_set, K<k>_ctr_set_lift_pct.
void write_lift_csv(std::ostream& out, const LiftTable& table);

// algorithm,k,seed_index,seed,t,ctr_sum,ctr_set,regret,bound,bound_no_failure
void write_runs_csv(std::ostream& out, const std::vector<RunReport>& reports);
std::vector<RunReport> read_runs_csv(std::istream& in);

// algorithm,k,t,runs,ctr_sum_mean,ctr_sum_se,ctr_set_mean,ctr_set_se,
// regret_mean,regret_se,bound
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace ubmbandit
