#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ubmbandit {

// Parses the declarative subset used by experiment files: comments (#),
// [table] headers (one level), and `key = value` where value is a quoted
// string, integer, float, boolean, or a single-line array of those.
// Returns a JSON object with one nested object per table.
nlohmann::json parse_toml(std::istream& in);
nlohmann::json parse_toml(std::string_view text);

// Inverse of parse_toml for objects of that shape.
std::string to_toml(const nlohmann::json& doc);

enum class ExperimentMode { kSynthetic, kReplay, kFitWeights, kSvdFeatures };

ExperimentMode parse_mode(std::string_view tag);
std::string_view to_string(ExperimentMode mode);

// Carries every violated field, one message each.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::kSynthetic;
  std::vector<std::string> algorithms{"ubm-linucb", "c2ucb"};
  std::vector<int> list_lengths{3};  // K values; one experiment per K
  int arms = 20;                     // m (synthetic)
  int dim = 5;                       // d (synthetic; replay uses 2 * rank)
  std::uint64_t horizon = 10000;     // T
  std::uint64_t seed = 1;            // master seed
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int threads = 0;                   // 0 = hardware concurrency
  std::string output_dir = "runs";
  std::vector<std::uint64_t> extra_checkpoints;

  struct Weights {
    std::string source = "geometric";  // geometric | file | em
    double decay = 0.9;
    std::string path;                  // weights JSON for `file` (and replay)
    std::uint64_t calibration_sessions = 20000;
  } weights;

  struct World {
    double gamma_min = 0.05;
    double gamma_max = 0.95;
    double beta = 0.0;  // 0 means d
    bool per_seed = false;
  } world;

  struct Policy {
    std::optional<double> alpha;  // fixed exploration width instead of the schedule
  } policy;

  struct Replay {
    std::string log;
    int rank = 10;
    std::string group_by = "candidates";  // candidates | user
    int oversampling = 10;
    int power_iterations = 2;
    bool traces = false;
  } replay;

  struct Em {
    int max_iterations = 200;
    double tolerance = 1e-6;
  } em;

  bool snapshots = true;

  // Every violated field; empty when valid. File references are checked
  // against the filesystem.
  std::vector<std::string> problems() const;
  // Throws ConfigError listing problems() when non-empty.
  void validate() const;

  // Checkpoints t = 100 * 2^i below T, T itself, and extra_checkpoints <= T.
  std::vector<std::uint64_t> checkpoints() const;

  nlohmann::json to_json() const;
  // Unknown keys are reported as problems; missing keys keep defaults.
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_defaults();

}  // namespace ubmbandit
