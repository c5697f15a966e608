#include "ubmbandit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace ubmbandit {
namespace {

using nlohmann::json;

class TomlParser {
 public:
  TomlParser(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

  json value() {
    skip_ws();
    if (at_end()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') return array_value();
    return scalar_value();
  }

  void expect_end() {
    skip_ws();
    if (!at_end() && s_[pos_] != '#') fail("unexpected trailing text");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("config line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }

  void skip_ws() {
    while (!at_end() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  json string_value() {
    const char quote = s_[pos_++];
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string");
      const char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        if (at_end()) fail("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json array_value() {
    ++pos_;  // '['
    json arr = json::array();
    skip_ws();
    if (!at_end() && s_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      arr.push_back(value());
      skip_ws();
      if (at_end()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (!at_end() && s_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json scalar_value() {
    const auto start = pos_;
    while (!at_end() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
           s_[pos_] != ' ' && s_[pos_] != '\t') {
      ++pos_;
    }
    std::string token(s_.substr(start, pos_ - start));
    if (token == "true") return true;
    if (token == "false") return false;
    token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
    if (token.empty()) fail("missing value");

    const bool integral = token.find_first_of(".eEn") == std::string::npos;
    if (integral) {
      long long v = 0;
      const char* first = token.data() + (token[0] == '+' ? 1 : 0);
      const auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
      if (ec == std::errc() && ptr == token.data() + token.size()) return v;
    } else {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() + token.size()) return v;
    }
    fail("cannot parse value '" + token + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_no_;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::string format_toml_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string out(buf);
  if (out.find_first_of(".en") == std::string::npos) out += ".0";
  return out;
}

std::string toml_value(const json& v) {
  if (v.is_string()) return json(v.get<std::string>()).dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) return format_toml_double(v.get<double>());
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += toml_value(v[i]);
    }
    return out + "]";
  }
  throw std::invalid_argument("to_toml: unsupported value " + v.dump());
}

// Pulls typed fields out of a JSON document, recording every mismatch
// instead of stopping at the first.
class FieldReader {
 public:
  explicit FieldReader(std::vector<std::string>& problems) : problems_(problems) {}

  template <typename T>
  void read(const json& obj, const std::string& prefix, const char* key, T& out,
            std::set<std::string>& seen) {
    seen.insert(key);
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string name = prefix + key;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, std::optional<double>>) {
        if (!v.is_number()) throw std::invalid_argument("");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("");
        out = v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("");
        out = v.get<std::string>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) throw std::invalid_argument("");
        }
        out = v.get<T>();
      } else {
        // vector of integers or strings
        if (!v.is_array()) throw std::invalid_argument("");
        T tmp;
        for (const auto& e : v) {
          using E = typename T::value_type;
          if constexpr (std::is_same_v<E, std::string>) {
            if (!e.is_string()) throw std::invalid_argument("");
          } else {
            if (!e.is_number_integer()) throw std::invalid_argument("");
            if constexpr (std::is_unsigned_v<E>) {
              if (e.get<long long>() < 0) throw std::invalid_argument("");
            }
          }
          tmp.push_back(e.get<E>());
        }
        out = std::move(tmp);
      }
    } catch (const std::exception&) {
      problems_.push_back(name + ": wrong type (" + v.dump() + ")");
    }
  }

  void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& seen) {
    for (const auto& [key, _] : obj.items()) {
      if (!seen.count(key)) problems_.push_back(prefix + key + ": unknown key");
    }
  }

 private:
  std::vector<std::string>& problems_;
};

const std::set<std::string>& known_algorithms() {
  static const std::set<std::string> tags{"ubm-linucb", "c2ucb", "cm-linucb", "dcm-linucb", "pbm-ucb"};
  return tags;
}

}  // namespace

json parse_toml(std::istream& in) {
  json doc = json::object();
  json* table = &doc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '[') {
      const auto close = t.find(']');
      if (close == std::string::npos) {
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": unterminated table header");
      }
      const std::string name = trim(std::string_view(t).substr(1, close - 1));
      const std::string rest = trim(std::string_view(t).substr(close + 1));
      if (!valid_key(name) || (!rest.empty() && rest[0] != '#')) {
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad table header");
      }
      if (doc.contains(name)) {
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate table [" + name + "]");
      }
      doc[name] = json::object();
      table = &doc[name];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (!valid_key(key)) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad key '" + key + "'");
    }
    if (table->contains(key)) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    TomlParser parser(std::string_view(t).substr(eq + 1), line_no);
    (*table)[key] = parser.value();
    parser.expect_end();
  }
  return doc;
}

json parse_toml(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_toml(in);
}

std::string to_toml(const json& doc) {
  std::ostringstream out;
  for (const auto& [key, v] : doc.items()) {
    if (!v.is_object()) out << key << " = " << toml_value(v) << '\n';
  }
  for (const auto& [key, v] : doc.items()) {
    if (!v.is_object()) continue;
    out << '\n' << '[' << key << "]\n";
    for (const auto& [k2, v2] : v.items()) out << k2 << " = " << toml_value(v2) << '\n';
  }
  return out.str();
}

ExperimentMode parse_mode(std::string_view tag) {
  if (tag == "synthetic") return ExperimentMode::kSynthetic;
  if (tag == "replay") return ExperimentMode::kReplay;
  if (tag == "fit-weights") return ExperimentMode::kFitWeights;
  if (tag == "svd-features") return ExperimentMode::kSvdFeatures;
  throw std::invalid_argument("unknown mode '" + std::string(tag) + "'");
}

std::string_view to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::kSynthetic: return "synthetic";
    case ExperimentMode::kReplay: return "replay";
    case ExperimentMode::kFitWeights: return "fit-weights";
    case ExperimentMode::kSvdFeatures: return "svd-features";
  }
  return "?";
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<std::string> ExperimentConfig::problems() const {
  std::vector<std::string> p;
  const bool learning = mode == ExperimentMode::kSynthetic || mode == ExperimentMode::kReplay;

  if (learning) {
    if (algorithms.empty()) p.push_back("algorithms: at least one algorithm required");
    std::set<std::string> dup;
    for (const auto& a : algorithms) {
      if (!known_algorithms().count(a)) p.push_back("algorithms: unknown algorithm '" + a + "'");
      if (!dup.insert(a).second) p.push_back("algorithms: duplicate '" + a + "'");
    }
    if (list_lengths.empty()) p.push_back("k: at least one list length required");
    for (int k : list_lengths) {
      if (k < 1) p.push_back("k: list length " + std::to_string(k) + " must be >= 1");
      if (mode == ExperimentMode::kSynthetic && k > arms) {
        p.push_back("k: list length " + std::to_string(k) + " exceeds arms m=" + std::to_string(arms));
      }
    }
    if (horizon < 1) p.push_back("horizon: T must be >= 1");
    if (seeds.empty()) p.push_back("seeds: at least one seed required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      p.push_back("seeds: duplicate seed");
    }
  }
  if (mode == ExperimentMode::kSynthetic) {
    if (arms < 1) p.push_back("arms: m must be >= 1");
    if (dim < 2) p.push_back("dim: d must be >= 2");
    if (!(world.gamma_min >= 0.0 && world.gamma_min <= world.gamma_max && world.gamma_max <= 1.0)) {
      p.push_back("world.gamma_min/gamma_max: need 0 <= gamma_min <= gamma_max <= 1");
    }
    if (world.beta < 0.0) p.push_back("world.beta: must be >= 0 (0 means d)");
  }
  if (threads < 0) p.push_back("threads: must be >= 0");
  if (output_dir.empty()) p.push_back("output_dir: must not be empty");
  for (auto c : extra_checkpoints) {
    if (c < 1 || c > horizon) p.push_back("checkpoints: " + std::to_string(c) + " outside [1, T]");
  }

  if (weights.source != "geometric" && weights.source != "file" && weights.source != "em") {
    p.push_back("weights.source: expected geometric, file or em, got '" + weights.source + "'");
  }
  if (weights.source == "geometric" && !(weights.decay > 0.0 && weights.decay <= 1.0)) {
    p.push_back("weights.decay: must lie in (0, 1]");
  }
  const bool needs_weight_file =
      (mode == ExperimentMode::kSynthetic && weights.source == "file") || mode == ExperimentMode::kReplay ||
      mode == ExperimentMode::kSvdFeatures;
  if (needs_weight_file) {
    if (weights.path.empty()) {
      p.push_back("weights.path: required");
    } else if (!std::filesystem::exists(weights.path)) {
      p.push_back("weights.path: file '" + weights.path + "' does not exist");
    }
  }
  if (weights.source == "em" && mode == ExperimentMode::kSynthetic && weights.calibration_sessions < 1) {
    p.push_back("weights.calibration_sessions: must be >= 1 for em");
  }

  const bool needs_log = mode != ExperimentMode::kSynthetic;
  if (needs_log) {
    if (replay.log.empty()) {
      p.push_back("replay.log: required");
    } else if (!std::filesystem::exists(replay.log)) {
      p.push_back("replay.log: file '" + replay.log + "' does not exist");
    }
  }
  if (mode == ExperimentMode::kReplay || mode == ExperimentMode::kSvdFeatures) {
    if (replay.rank < 1) p.push_back("replay.rank: must be >= 1");
    if (replay.oversampling < 0) p.push_back("replay.oversampling: must be >= 0");
    if (replay.power_iterations < 0) p.push_back("replay.power_iterations: must be >= 0");
  }
  if (replay.group_by != "candidates" && replay.group_by != "user") {
    p.push_back("replay.group_by: expected candidates or user, got '" + replay.group_by + "'");
  }
  if (policy.alpha && !(*policy.alpha >= 0.0)) p.push_back("policy.alpha: must be >= 0");
  if (em.max_iterations < 1) p.push_back("em.max_iterations: must be >= 1");
  if (!(em.tolerance >= 0.0)) p.push_back("em.tolerance: must be >= 0");
  return p;
}

void ExperimentConfig::validate() const {
  auto p = problems();
  if (!p.empty()) throw ConfigError(std::move(p));
}

std::vector<std::uint64_t> ExperimentConfig::checkpoints() const {
  std::set<std::uint64_t> cps;
  for (std::uint64_t t = 100; t < horizon; t *= 2) cps.insert(t);
  cps.insert(horizon);
  for (auto c : extra_checkpoints) {
    if (c >= 1 && c <= horizon) cps.insert(c);
  }
  return {cps.begin(), cps.end()};
}

json ExperimentConfig::to_json() const {
  json j;
  j["mode"] = std::string(to_string(mode));
  j["algorithms"] = algorithms;
  j["k"] = list_lengths;
  j["arms"] = arms;
  j["dim"] = dim;
  j["horizon"] = horizon;
  j["seed"] = seed;
  j["seeds"] = seeds;
  j["threads"] = threads;
  j["output_dir"] = output_dir;
  j["checkpoints"] = extra_checkpoints;
  j["snapshots"] = snapshots;
  j["weights"] = {{"source", weights.source},
                  {"decay", weights.decay},
                  {"path", weights.path},
                  {"calibration_sessions", weights.calibration_sessions}};
  j["world"] = {{"gamma_min", world.gamma_min},
                {"gamma_max", world.gamma_max},
                {"beta", world.beta},
                {"per_seed", world.per_seed}};
  j["policy"] = json::object();
  if (policy.alpha) j["policy"]["alpha"] = *policy.alpha;
  j["replay"] = {{"log", replay.log},
                 {"rank", replay.rank},
                 {"group_by", replay.group_by},
                 {"oversampling", replay.oversampling},
                 {"power_iterations", replay.power_iterations},
                 {"traces", replay.traces}};
  j["em"] = {{"max_iterations", em.max_iterations}, {"tolerance", em.tolerance}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig c;
  std::vector<std::string> problems;
  if (!doc.is_object()) throw ConfigError({"config: top level must be a table"});
  FieldReader r(problems);

  std::set<std::string> seen;
  std::string mode_tag(to_string(c.mode));
  r.read(doc, "", "mode", mode_tag, seen);
  try {
    c.mode = parse_mode(mode_tag);
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("mode: ") + e.what());
  }
  r.read(doc, "", "algorithms", c.algorithms, seen);
  r.read(doc, "", "k", c.list_lengths, seen);
  r.read(doc, "", "arms", c.arms, seen);
  r.read(doc, "", "dim", c.dim, seen);
  r.read(doc, "", "horizon", c.horizon, seen);
  r.read(doc, "", "seed", c.seed, seen);
  r.read(doc, "", "seeds", c.seeds, seen);
  r.read(doc, "", "threads", c.threads, seen);
  r.read(doc, "", "output_dir", c.output_dir, seen);
  r.read(doc, "", "checkpoints", c.extra_checkpoints, seen);
  r.read(doc, "", "snapshots", c.snapshots, seen);

  auto table = [&](const char* name, auto&& body) {
    seen.insert(name);
    if (!doc.contains(name)) return;
    const json& t = doc.at(name);
    if (!t.is_object()) {
      problems.push_back(std::string(name) + ": expected a table");
      return;
    }
    std::set<std::string> inner;
    const std::string prefix = std::string(name) + ".";
    body(t, prefix, inner);
    r.reject_unknown(t, prefix, inner);
  };
  table("weights", [&](const json& t, const std::string& p, std::set<std::string>& s) {
    r.read(t, p, "source", c.weights.source, s);
    r.read(t, p, "decay", c.weights.decay, s);
    r.read(t, p, "path", c.weights.path, s);
    r.read(t, p, "calibration_sessions", c.weights.calibration_sessions, s);
  });
  table("world", [&](const json& t, const std::string& p, std::set<std::string>& s) {
    r.read(t, p, "gamma_min", c.world.gamma_min, s);
    r.read(t, p, "gamma_max", c.world.gamma_max, s);
    r.read(t, p, "beta", c.world.beta, s);
    r.read(t, p, "per_seed", c.world.per_seed, s);
  });
  table("policy", [&](const json& t, const std::string& p, std::set<std::string>& s) {
    r.read(t, p, "alpha", c.policy.alpha, s);
  });
  table("replay", [&](const json& t, const std::string& p, std::set<std::string>& s) {
    r.read(t, p, "log", c.replay.log, s);
    r.read(t, p, "rank", c.replay.rank, s);
    r.read(t, p, "group_by", c.replay.group_by, s);
    r.read(t, p, "oversampling", c.replay.oversampling, s);
    r.read(t, p, "power_iterations", c.replay.power_iterations, s);
    r.read(t, p, "traces", c.replay.traces, s);
  });
  table("em", [&](const json& t, const std::string& p, std::set<std::string>& s) {
    r.read(t, p, "max_iterations", c.em.max_iterations, s);
    r.read(t, p, "tolerance", c.em.tolerance, s);
  });
  r.reject_unknown(doc, "", seen);

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  return ExperimentConfig::from_json(parse_toml(in));
}

std::string dump_defaults() {
  std::string out = "# Experiment defaults. [policy] alpha = <float> fixes the exploration width.\n";
  return out + to_toml(ExperimentConfig{}.to_json());
}

}  // namespace ubmbandit
