#include "ubmbandit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "ubmbandit/csv.hpp"
#include "ubmbandit/em.hpp"
#include "ubmbandit/features.hpp"
#include "ubmbandit/policy.hpp"
#include "ubmbandit/replay.hpp"
#include "ubmbandit/reward.hpp"
#include "ubmbandit/session_log.hpp"
#include "ubmbandit/svd.hpp"
#include "ubmbandit/world.hpp"

namespace ubmbandit {
namespace {

namespace fs = std::filesystem;

// Everything a synthetic run needs besides its own RNG stream.
struct SyntheticEnv {
  std::shared_ptr<const GroundTruthWorld> world;
  PositionWeights policy_weights;
  std::vector<double> satisfaction;
};

// Shared replay inputs: grouped log with per-group contexts.
struct ReplayEnv {
  ReplayDataset dataset;
  PositionWeights weights;
  std::vector<double> satisfaction;
  int dim = 0;
};

std::string run_tag(const std::string& algorithm, int k) { return algorithm + "/K" + std::to_string(k); }

std::string run_name(const std::string& algorithm, int k, std::uint64_t seed) {
  return algorithm + "_K" + std::to_string(k) + "_seed" + std::to_string(seed);
}

// Uniformly random ordered K-lists from the pool with UBM clicks.
std::vector<SessionRecord> calibration_log(const GroundTruthWorld& world, int k, std::uint64_t sessions,
                                           std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<SessionRecord> log;
  log.reserve(static_cast<std::size_t>(sessions));
  std::vector<ArmId> pool(static_cast<std::size_t>(world.arm_count()));
  std::iota(pool.begin(), pool.end(), ArmId{0});
  for (std::uint64_t s = 0; s < sessions; ++s) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    SessionRecord rec;
    rec.user = "calibration";
    rec.displayed.assign(pool.begin(), pool.begin() + k);
    std::vector<double> gammas;
    for (ArmId a : rec.displayed) gammas.push_back(world.gamma(a));
    rec.clicks = simulate_session(ClickModel::kUbm, gammas, world.weights(), rng);
    log.push_back(std::move(rec));
  }
  return log;
}

PositionWeights true_weights(const ExperimentConfig& config, int k) {
  if (config.weights.source == "file") {
    auto w = load_weights(config.weights.path);
    if (w.list_length() < k) {
      throw std::invalid_argument("weights file covers K=" + std::to_string(w.list_length()) +
                                  " but the experiment needs K=" + std::to_string(k));
    }
    return w;
  }
  return PositionWeights::geometric(k, config.weights.decay);
}

SyntheticEnv make_synthetic_env(const ExperimentConfig& config, int k, std::uint64_t world_index) {
  WorldSpec spec;
  spec.dim = config.dim;
  spec.arms = config.arms;
  spec.beta = config.world.beta;
  spec.gamma_min = config.world.gamma_min;
  spec.gamma_max = config.world.gamma_max;

  SyntheticEnv env;
  const auto world_seed = derive_seed(config.seed, "world", world_index);
  env.world = std::make_shared<const GroundTruthWorld>(make_world(spec, true_weights(config, k), world_seed));
  env.policy_weights = env.world->weights();

  const bool wants_dcm = std::count(config.algorithms.begin(), config.algorithms.end(), "dcm-linucb") > 0;
  if (config.weights.source == "em" || wants_dcm) {
    const auto log = calibration_log(*env.world, k, config.weights.calibration_sessions,
                                     derive_seed(config.seed, "calibration/K" + std::to_string(k), world_index));
    if (config.weights.source == "em") {
      EmOptions opts;
      opts.max_iterations = config.em.max_iterations;
      opts.tolerance = config.em.tolerance;
      env.policy_weights = em_fit_ubm(log, k, opts).weights;
    }
    env.satisfaction = fit_dcm_satisfaction(log, k);
  }
  return env;
}

ReplayEnv make_replay_env(const ExperimentConfig& config) {
  ReplayEnv env;
  const auto log = load_session_log(config.replay.log);
  if (log.empty()) throw std::invalid_argument("replay log '" + config.replay.log + "' is empty");
  env.weights = load_weights(config.weights.path);
  const auto group_by = config.replay.group_by == "user" ? GroupBy::kUserAndCandidates : GroupBy::kCandidates;
  env.dataset = ReplayDataset::build(log, group_by);
  if (env.dataset.max_list_length() > env.weights.list_length()) {
    throw std::invalid_argument("logged lists are longer than the weight table");
  }
  env.satisfaction = fit_dcm_satisfaction(log, env.weights.list_length());

  const auto m = build_attractiveness_matrix(log, env.weights);
  SvdOptions svd_opts;
  svd_opts.oversampling = config.replay.oversampling;
  svd_opts.power_iterations = config.replay.power_iterations;
  svd_opts.seed = derive_seed(config.seed, "svd", 0);
  const auto fact = truncated_svd(m.values, config.replay.rank, svd_opts);
  env.dim = 2 * fact.rank();

  // Group context for item j: [mean U over the group's records, V(j)].
  for (std::size_t g = 0; g < env.dataset.size(); ++g) {
    const auto& group = env.dataset.group(g);
    Eigen::VectorXd user = Eigen::VectorXd::Zero(fact.rank());
    for (const auto& rec : group.records) user += fact.u.row(static_cast<Eigen::Index>(m.user_index(rec.user))).transpose();
    user /= static_cast<double>(group.records.size());
    std::vector<Context> contexts;
    for (ArmId item : group.candidates) {
      Context x(env.dim);
      x.head(fact.rank()) = user;
      x.tail(fact.rank()) = fact.v.row(static_cast<Eigen::Index>(m.item_index(item))).transpose();
      contexts.push_back(normalize_context(std::move(x)));
    }
    env.dataset.set_contexts(g, std::move(contexts));
  }
  return env;
}

PolicyConfig policy_config(const ExperimentConfig& config, int dim, int k, const PositionWeights& weights,
                           const std::vector<double>& satisfaction) {
  PolicyConfig pc;
  pc.dim = dim;
  pc.list_length = k;
  pc.weights = weights;
  pc.satisfaction = satisfaction;
  pc.beta = config.mode == ExperimentMode::kSynthetic ? config.world.beta : 0.0;
  pc.fixed_alpha = config.policy.alpha;
  return pc;
}

void write_snapshot_file(const fs::path& path, const Policy& policy) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << snapshot_to_json(policy.snapshot()).dump(1) << '\n';
}

void run_synthetic(const ExperimentConfig& config, const SyntheticEnv& env, RunReport& report,
                   const fs::path& snapshot_dir) {
  const auto& world = *env.world;
  const int k = report.list_length;
  const auto kind = parse_policy_kind(report.algorithm);
  auto policy = make_policy(kind, policy_config(config, world.dim(), k, env.policy_weights, env.satisfaction));

  std::optional<AlphaParams> bound_params;
  if (kind == PolicyKind::kUbmLinUcb) {
    bound_params = static_cast<const LinearUcbPolicy&>(*policy).alpha_params();
  }

  CounterRng rng(derive_seed(config.seed, run_tag(report.algorithm, k), report.seed));
  const auto checkpoints = config.checkpoints();
  auto next = checkpoints.begin();
  double clicks = 0.0;
  double sets = 0.0;
  double regret = 0.0;
  for (std::uint64_t t = 1; t <= config.horizon; ++t) {
    const auto outcome = run_round(world, *policy, k, rng);
    for (int c : outcome.clicks) clicks += c;
    sets += set_reward(outcome.clicks);
    regret += outcome.regret;
    if (next != checkpoints.end() && *next == t) {
      CheckpointMetrics cp;
      cp.t = t;
      cp.ctr_sum = clicks / static_cast<double>(t);
      cp.ctr_set = sets / static_cast<double>(t);
      cp.regret = regret;
      if (bound_params) {
        cp.bound = regret_bound(*bound_params, t, true);
        cp.bound_no_failure = regret_bound(*bound_params, t, false);
      }
      report.checkpoints.push_back(cp);
      ++next;
    }
  }
  if (!snapshot_dir.empty()) {
    const auto path = snapshot_dir / (run_name(report.algorithm, k, report.seed) + ".json");
    write_snapshot_file(path, *policy);
    report.snapshot_path = path.string();
  }
}

void run_replay(const ExperimentConfig& config, const ReplayEnv& env, RunReport& report,
                const fs::path& snapshot_dir, const fs::path& trace_dir) {
  const int k = report.list_length;
  const auto kind = parse_policy_kind(report.algorithm);
  auto policy = make_policy(kind, policy_config(config, env.dim, k, env.weights, env.satisfaction));

  const auto checkpoints = config.checkpoints();
  auto next = checkpoints.begin();
  ReplayOptions opts;
  opts.rounds = config.horizon;
  opts.seed = derive_seed(config.seed, run_tag(report.algorithm, k), report.seed);
  opts.keep_trace = !trace_dir.empty();
  opts.on_round = [&](std::uint64_t t, double ctr_sum, double ctr_set) {
    if (next != checkpoints.end() && *next == t) {
      report.checkpoints.push_back({t, ctr_sum, ctr_set, std::nullopt, std::nullopt, std::nullopt});
      ++next;
    }
  };
  const auto result = replay_evaluate(*policy, env.dataset, env.weights, k, opts);
  report.skipped_rounds = result.skipped;
  if (result.rounds > 0 && (report.checkpoints.empty() || report.checkpoints.back().t != result.rounds)) {
    report.checkpoints.push_back({result.rounds, result.ctr_sum, result.ctr_set, std::nullopt, std::nullopt,
                                  std::nullopt});
  }
  const auto name = run_name(report.algorithm, k, report.seed);
  if (!trace_dir.empty()) {
    std::ofstream out(trace_dir / (name + ".csv"));
    write_trace_csv(out, result);
  }
  if (!snapshot_dir.empty()) {
    const auto path = snapshot_dir / (name + ".json");
    write_snapshot_file(path, *policy);
    report.snapshot_path = path.string();
  }
}

void run_pool(std::size_t tasks, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tasks; i = next++) body(i);
  };
  if (workers <= 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void write_outputs(const ExperimentConfig& config, const std::vector<RunReport>& reports) {
  const fs::path dir = config.output_dir;
  {
    std::ofstream out(dir / "config.toml");
    out << to_toml(config.to_json());
  }
  {
    std::ofstream out(dir / "runs.csv");
    write_runs_csv(out, reports);
  }
  {
    std::ofstream out(dir / "summary.csv");
    write_summary_csv(out, aggregate(reports));
  }
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& r : reports) {
    meta.push_back({{"algorithm", r.algorithm},
                    {"k", r.list_length},
                    {"seed", r.seed},
                    {"wall_seconds", r.wall_seconds},
                    {"snapshot", r.snapshot_path},
                    {"skipped_rounds", r.skipped_rounds},
                    {"error", r.error}});
  }
  {
    std::ofstream out(dir / "runs.json");
    out << meta.dump(1) << '\n';
  }
  const bool has_baseline = std::count(config.algorithms.begin(), config.algorithms.end(), "c2ucb") > 0;
  if (has_baseline && config.algorithms.size() >= 2) {
    std::vector<RunReport> ok;
    for (const auto& r : reports) {
      if (r.ok()) ok.push_back(r);
    }
    try {
      const auto table = compare_table(ok, "c2ucb");
      std::ofstream out(dir / "compare.csv");
      write_lift_csv(out, table);
    } catch (const std::invalid_argument&) {
      // Failed runs or replay skips can leave no common checkpoint; the
      // per-run files still describe what happened.
    }
  }
}

}  // namespace

std::vector<RunReport> run_experiment(const ExperimentConfig& config, const RunHooks& hooks) {
  config.validate();
  if (config.mode != ExperimentMode::kSynthetic && config.mode != ExperimentMode::kReplay) {
    throw std::invalid_argument("run_experiment handles synthetic and replay modes only");
  }
  const bool synthetic = config.mode == ExperimentMode::kSynthetic;

  fs::path snapshot_dir;
  fs::path trace_dir;
  if (hooks.write_outputs) {
    fs::create_directories(config.output_dir);
    if (config.snapshots) {
      snapshot_dir = fs::path(config.output_dir) / "snapshots";
      fs::create_directories(snapshot_dir);
    }
    if (!synthetic && config.replay.traces) {
      trace_dir = fs::path(config.output_dir) / "traces";
      fs::create_directories(trace_dir);
    }
  }

  // Environments are built serially up front; runs only read them.
  std::map<std::pair<int, std::uint64_t>, SyntheticEnv> synthetic_envs;
  std::optional<ReplayEnv> replay_env;
  if (synthetic) {
    for (int k : config.list_lengths) {
      if (config.world.per_seed) {
        for (auto s : config.seeds) synthetic_envs[{k, s}] = make_synthetic_env(config, k, s);
      } else {
        synthetic_envs[{k, 0}] = make_synthetic_env(config, k, 0);
      }
    }
  } else {
    replay_env = make_replay_env(config);
  }

  std::vector<RunReport> reports;
  for (int k : config.list_lengths) {
    for (const auto& algorithm : config.algorithms) {
      for (std::size_t i = 0; i < config.seeds.size(); ++i) {
        RunReport r;
        r.algorithm = algorithm;
        r.list_length = k;
        r.seed_index = i;
        r.seed = config.seeds[i];
        reports.push_back(std::move(r));
      }
    }
  }

  std::mutex hook_mutex;
  run_pool(reports.size(), config.threads, [&](std::size_t i) {
    auto& report = reports[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      if (synthetic) {
        const auto key = std::make_pair(report.list_length, config.world.per_seed ? report.seed : 0);
        run_synthetic(config, synthetic_envs.at(key), report, snapshot_dir);
      } else {
        run_replay(config, *replay_env, report, snapshot_dir, trace_dir);
      }
    } catch (const std::exception& e) {
      report.error = e.what();
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (hooks.on_run) {
      std::lock_guard lock(hook_mutex);
      hooks.on_run(report);
    }
  });

  if (hooks.write_outputs) write_outputs(config, reports);
  return reports;
}

std::vector<SummaryRow> aggregate(const std::vector<RunReport>& reports) {
  // (K, algorithm in first-seen order) -> t -> values
  struct Acc {
    std::vector<double> sum, set, regret;
    std::optional<double> bound;
  };
  std::vector<std::pair<std::string, int>> order;
  std::map<std::pair<std::string, int>, std::map<std::uint64_t, Acc>> acc;
  for (const auto& r : reports) {
    if (!r.ok()) continue;
    const auto key = std::make_pair(r.algorithm, r.list_length);
    if (!acc.count(key)) order.push_back(key);
    auto& by_t = acc[key];
    for (const auto& cp : r.checkpoints) {
      auto& a = by_t[cp.t];
      a.sum.push_back(cp.ctr_sum);
      a.set.push_back(cp.ctr_set);
      if (cp.regret) a.regret.push_back(*cp.regret);
      if (cp.bound) a.bound = cp.bound;
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    for (const auto& [t, a] : acc.at(key)) {
      SummaryRow row;
      row.algorithm = key.first;
      row.list_length = key.second;
      row.t = t;
      row.runs = a.sum.size();
      row.ctr_sum_mean = mean_of(a.sum);
      row.ctr_sum_se = se_of(a.sum);
      row.ctr_set_mean = mean_of(a.set);
      row.ctr_set_se = se_of(a.set);
      if (!a.regret.empty()) {
        row.regret_mean = mean_of(a.regret);
        row.regret_se = se_of(a.regret);
      }
      row.bound = a.bound;
      rows.push_back(row);
    }
  }
  return rows;
}

LiftTable compare_table(const std::vector<RunReport>& reports, const std::string& baseline) {
  LiftTable table;
  table.baseline = baseline;
  std::map<int, std::vector<std::uint64_t>> grid;  // K -> checkpoint list shared by all runs
  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> finals;
  for (const auto& r : reports) {
    if (r.checkpoints.empty()) throw std::invalid_argument("compare_table: run without checkpoints");
    std::vector<std::uint64_t> ts;
    for (const auto& cp : r.checkpoints) ts.push_back(cp.t);
    const auto [it, fresh] = grid.emplace(r.list_length, ts);
    if (!fresh && it->second != ts) {
      throw std::invalid_argument("compare_table: mismatched checkpoints at K=" + std::to_string(r.list_length));
    }
    if (std::find(table.algorithms.begin(), table.algorithms.end(), r.algorithm) == table.algorithms.end()) {
      table.algorithms.push_back(r.algorithm);
    }
    auto& f = finals[{r.algorithm, r.list_length}];
    f.first.push_back(r.checkpoints.back().ctr_sum);
    f.second.push_back(r.checkpoints.back().ctr_set);
  }
  if (table.algorithms.size() < 2) throw std::invalid_argument("compare_table: need at least two algorithms");
  if (std::find(table.algorithms.begin(), table.algorithms.end(), baseline) == table.algorithms.end()) {
    throw std::invalid_argument("compare_table: baseline '" + baseline + "' not present");
  }
  for (const auto& [k, ts] : grid) {
    table.list_lengths.push_back(k);
    table.horizon[k] = ts.back();
    for (const auto& a : table.algorithms) {
      if (!finals.count({a, k})) {
        throw std::invalid_argument("compare_table: " + a + " has no runs at K=" + std::to_string(k));
      }
    }
  }
  for (int k : table.list_lengths) {
    const auto& base = finals.at({baseline, k});
    const double base_sum = mean_of(base.first);
    const double base_set = mean_of(base.second);
    for (const auto& a : table.algorithms) {
      const auto& f = finals.at({a, k});
      LiftEntry e;
      e.ctr_sum = mean_of(f.first);
      e.ctr_set = mean_of(f.second);
      e.ctr_sum_lift_pct = 100.0 * (e.ctr_sum / base_sum - 1.0);
      e.ctr_set_lift_pct = 100.0 * (e.ctr_set / base_set - 1.0);
      table.entries[a][k] = e;
    }
  }
  return table;
}

void write_lift_csv(std::ostream& out, const LiftTable& table) {
  out << "algorithm";
  for (int k : table.list_lengths) {
    const auto p = "K" + std::to_string(k) + "_";
    out << ',' << p << "ctr_sum," << p << "ctr_sum_lift_pct," << p << "ctr_set," << p << "ctr_set_lift_pct";
  }
  out << '\n';
  for (const auto& a : table.algorithms) {
    out << a;
    for (int k : table.list_lengths) {
      const auto& e = table.at(a, k);
      out << ',' << format_double(e.ctr_sum) << ',' << format_double(e.ctr_sum_lift_pct) << ','
          << format_double(e.ctr_set) << ',' << format_double(e.ctr_set_lift_pct);
    }
    out << '\n';
  }
}

void write_runs_csv(std::ostream& out, const std::vector<RunReport>& reports) {
  out << "algorithm,k,seed_index,seed,t,ctr_sum,ctr_set,regret,bound,bound_no_failure\n";
  for (const auto& r : reports) {
    for (const auto& cp : r.checkpoints) {
      out << r.algorithm << ',' << r.list_length << ',' << r.seed_index << ',' << r.seed << ',' << cp.t << ','
          << format_double(cp.ctr_sum) << ',' << format_double(cp.ctr_set) << ',' << optional_cell(cp.regret)
          << ',' << optional_cell(cp.bound) << ',' << optional_cell(cp.bound_no_failure) << '\n';
    }
  }
}

std::vector<RunReport> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("runs.csv: missing header");
  const auto header = split_csv_line(line);
  if (header.size() != 10 || header[0] != "algorithm") throw std::runtime_error("runs.csv: unexpected header");
  std::vector<RunReport> reports;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 10) {
      throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": expected 10 cells");
    }
    try {
      const int k = std::stoi(cells[1]);
      const auto seed_index = static_cast<std::size_t>(std::stoull(cells[2]));
      if (reports.empty() || reports.back().algorithm != cells[0] || reports.back().list_length != k ||
          reports.back().seed_index != seed_index) {
        RunReport r;
        r.algorithm = cells[0];
        r.list_length = k;
        r.seed_index = seed_index;
        r.seed = std::stoull(cells[3]);
        reports.push_back(std::move(r));
      }
      CheckpointMetrics cp;
      cp.t = std::stoull(cells[4]);
      cp.ctr_sum = std::stod(cells[5]);
      cp.ctr_set = std::stod(cells[6]);
      cp.regret = parse_optional(cells[7]);
      cp.bound = parse_optional(cells[8]);
      cp.bound_no_failure = parse_optional(cells[9]);
      reports.back().checkpoints.push_back(cp);
    } catch (const std::logic_error&) {
      throw std::runtime_error("runs.csv line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return reports;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "algorithm,k,t,runs,ctr_sum_mean,ctr_sum_se,ctr_set_mean,ctr_set_se,regret_mean,regret_se,bound\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.list_length << ',' << r.t << ',' << r.runs << ',' << format_double(r.ctr_sum_mean)
        << ',' << format_double(r.ctr_sum_se) << ',' << format_double(r.ctr_set_mean) << ','
        << format_double(r.ctr_set_se) << ',' << optional_cell(r.regret_mean) << ',' << optional_cell(r.regret_se)
        << ',' << optional_cell(r.bound) << '\n';
  }
}

}  // namespace ubmbandit
