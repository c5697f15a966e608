#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "ubmbandit/policy.hpp"

namespace ubmbandit {
namespace {

constexpr char kMagic[8] = {'U', 'B', 'M', 'P', 'O', 'L', 'S', 'N'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(buf), 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void vector(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    unsigned char buf[8];
    if (!in_.read(reinterpret_cast<char*>(buf), 8)) {
      throw std::runtime_error("policy snapshot: truncated input");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count() {
    const auto n = u64();
    if (n > (1ULL << 32)) throw std::runtime_error("policy snapshot: implausible length");
    return static_cast<std::size_t>(n);
  }
  std::vector<double> doubles() {
    std::vector<double> v(count());
    for (double& x : v) x = f64();
    return v;
  }
  Eigen::MatrixXd matrix() {
    const auto rows = count();
    const auto cols = count();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }
  Eigen::VectorXd vector() {
    Eigen::VectorXd v(count());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }

 private:
  std::istream& in_;
};

PositionWeights weights_from_tilde(int list_length, const std::vector<double>& tilde) {
  if (list_length == 0) return PositionWeights{};
  PositionWeights w(list_length);
  if (tilde.size() != w.slot_count()) throw std::runtime_error("policy snapshot: bad weight table");
  for (std::size_t s = 0; s < tilde.size(); ++s) {
    const auto [k, kp] = PositionWeights::slot_position(s);
    w.set(k, kp, tilde[s]);
  }
  return w;
}

bool same(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
  return std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index m = n ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != m) {
      throw std::runtime_error("policy snapshot: ragged matrix");
    }
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = rows[r][c];
  }
  return out;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

bool identical(const PolicySnapshot& x, const PolicySnapshot& y) {
  const auto& cx = x.config;
  const auto& cy = y.config;
  const auto& ax = x.alpha;
  const auto& ay = y.alpha;
  return x.kind == y.kind && x.round == y.round && cx.dim == cy.dim &&
         cx.list_length == cy.list_length && cx.weights == cy.weights &&
         cx.satisfaction == cy.satisfaction && cx.beta == cy.beta &&
         cx.fixed_alpha == cy.fixed_alpha && cx.fixed_scores == cy.fixed_scores &&
         ax.dim == ay.dim && ax.lambda == ay.lambda && ax.beta == ay.beta &&
         ax.phi_prime == ay.phi_prime && ax.list_length == ay.list_length &&
         ax.horizon == ay.horizon && x.lambda == y.lambda && same(x.a, y.a) &&
         same(x.a_inv, y.a_inv) && same(x.b, y.b) && same(x.theta, y.theta) &&
         x.update_count == y.update_count && x.arm_stats == y.arm_stats;
}

void write_snapshot(std::ostream& out, const PolicySnapshot& s) {
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.u64(PolicySnapshot::kVersion);
  w.u64(static_cast<std::uint64_t>(s.kind));
  w.u64(s.round);
  w.i64(s.config.dim);
  w.i64(s.config.list_length);
  w.i64(s.config.weights.list_length());
  w.doubles(s.config.weights.tilde());
  w.doubles(s.config.satisfaction);
  w.f64(s.config.beta);
  w.u64(s.config.fixed_alpha ? 1 : 0);
  w.f64(s.config.fixed_alpha.value_or(0.0));
  w.u64(s.config.fixed_scores.size());
  for (const auto& [arm, score] : s.config.fixed_scores) {
    w.i64(arm);
    w.f64(score);
  }
  w.i64(s.alpha.dim);
  w.f64(s.alpha.lambda);
  w.f64(s.alpha.beta);
  w.f64(s.alpha.phi_prime);
  w.i64(s.alpha.list_length);
  w.u64(s.alpha.horizon);
  w.f64(s.lambda);
  w.matrix(s.a);
  w.matrix(s.a_inv);
  w.vector(s.b);
  w.vector(s.theta);
  w.u64(s.update_count);
  w.u64(s.arm_stats.size());
  for (const auto& [arm, st] : s.arm_stats) {
    w.i64(arm);
    w.f64(st[0]);
    w.f64(st[1]);
  }
  if (!out) throw std::runtime_error("policy snapshot: write failed");
}

PolicySnapshot read_snapshot(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("policy snapshot: bad magic");
  }
  Reader r(in);
  const auto version = r.u64();
  if (version != PolicySnapshot::kVersion) {
    throw std::runtime_error("policy snapshot: unsupported version " + std::to_string(version));
  }
  PolicySnapshot s;
  const auto kind = r.u64();
  if (kind > static_cast<std::uint64_t>(PolicyKind::kFixedScore)) {
    throw std::runtime_error("policy snapshot: unknown policy kind");
  }
  s.kind = static_cast<PolicyKind>(kind);
  s.round = r.u64();
  s.config.dim = static_cast<int>(r.i64());
  s.config.list_length = static_cast<int>(r.i64());
  const int wk = static_cast<int>(r.i64());
  s.config.weights = weights_from_tilde(wk, r.doubles());
  s.config.satisfaction = r.doubles();
  s.config.beta = r.f64();
  const bool has_alpha = r.u64() != 0;
  const double fixed_alpha = r.f64();
  if (has_alpha) s.config.fixed_alpha = fixed_alpha;
  for (std::size_t n = r.count(); n > 0; --n) {
    const auto arm = r.i64();
    s.config.fixed_scores[arm] = r.f64();
  }
  s.alpha.dim = static_cast<int>(r.i64());
  s.alpha.lambda = r.f64();
  s.alpha.beta = r.f64();
  s.alpha.phi_prime = r.f64();
  s.alpha.list_length = static_cast<int>(r.i64());
  s.alpha.horizon = r.u64();
  s.lambda = r.f64();
  s.a = r.matrix();
  s.a_inv = r.matrix();
  s.b = r.vector();
  s.theta = r.vector();
  s.update_count = r.u64();
  for (std::size_t n = r.count(); n > 0; --n) {
    const auto arm = r.i64();
    auto& st = s.arm_stats[arm];
    st[0] = r.f64();
    st[1] = r.f64();
  }
  return s;
}

nlohmann::json snapshot_to_json(const PolicySnapshot& s) {
  nlohmann::json j;
  j["version"] = PolicySnapshot::kVersion;
  j["tag"] = std::string(to_string(s.kind));
  j["round"] = s.round;
  j["dim"] = s.config.dim;
  j["K"] = s.config.list_length;
  j["weights"] = s.config.weights.list_length() ? s.config.weights.to_json() : nlohmann::json();
  j["satisfaction"] = s.config.satisfaction;
  j["beta"] = s.config.beta;
  j["fixed_alpha"] = s.config.fixed_alpha ? nlohmann::json(*s.config.fixed_alpha) : nlohmann::json();
  auto scores = nlohmann::json::array();
  for (const auto& [arm, v] : s.config.fixed_scores) scores.push_back({arm, v});
  j["fixed_scores"] = scores;
  j["alpha"] = {{"dim", s.alpha.dim},           {"lambda", s.alpha.lambda},
                {"beta", s.alpha.beta},         {"phi_prime", s.alpha.phi_prime},
                {"K", s.alpha.list_length},     {"horizon", s.alpha.horizon}};
  j["lambda"] = s.lambda;
  j["A"] = matrix_json(s.a);
  j["A_inv"] = matrix_json(s.a_inv);
  j["b"] = vector_json(s.b);
  j["theta"] = vector_json(s.theta);
  j["update_count"] = s.update_count;
  auto stats = nlohmann::json::array();
  for (const auto& [arm, st] : s.arm_stats) stats.push_back({arm, st[0], st[1]});
  j["arm_stats"] = stats;
  return j;
}

PolicySnapshot snapshot_from_json(const nlohmann::json& j) {
  if (j.at("version").get<std::uint32_t>() != PolicySnapshot::kVersion) {
    throw std::runtime_error("policy snapshot: unsupported JSON version");
  }
  PolicySnapshot s;
  s.kind = parse_policy_kind(j.at("tag").get<std::string>());
  s.round = j.at("round").get<std::uint64_t>();
  s.config.dim = j.at("dim").get<int>();
  s.config.list_length = j.at("K").get<int>();
  if (!j.at("weights").is_null()) s.config.weights = PositionWeights::from_json(j.at("weights"));
  s.config.satisfaction = j.at("satisfaction").get<std::vector<double>>();
  s.config.beta = j.at("beta").get<double>();
  if (!j.at("fixed_alpha").is_null()) s.config.fixed_alpha = j.at("fixed_alpha").get<double>();
  for (const auto& e : j.at("fixed_scores")) s.config.fixed_scores[e[0].get<ArmId>()] = e[1].get<double>();
  const auto& a = j.at("alpha");
  s.alpha.dim = a.at("dim").get<int>();
  s.alpha.lambda = a.at("lambda").get<double>();
  s.alpha.beta = a.at("beta").get<double>();
  s.alpha.phi_prime = a.at("phi_prime").get<double>();
  s.alpha.list_length = a.at("K").get<int>();
  s.alpha.horizon = a.at("horizon").get<std::uint64_t>();
  s.lambda = j.at("lambda").get<double>();
  s.a = matrix_from_json(j.at("A"));
  s.a_inv = matrix_from_json(j.at("A_inv"));
  s.b = vector_from_json(j.at("b"));
  s.theta = vector_from_json(j.at("theta"));
  s.update_count = j.at("update_count").get<std::uint64_t>();
  for (const auto& e : j.at("arm_stats")) {
    s.arm_stats[e[0].get<ArmId>()] = {e[1].get<double>(), e[2].get<double>()};
  }
  return s;
}

}  // namespace ubmbandit
