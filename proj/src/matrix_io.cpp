#include "ubmbandit/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ubmbandit {
namespace {

constexpr char kMagic[8] = {'U', 'B', 'M', 'M', 'A', 'T', '0', '1'};

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), bytes)) throw std::runtime_error("matrix file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("write_matrix: dimensions exceed 32 bits");
  }
  out.write(kMagic, sizeof kMagic);
  put_le(out, static_cast<std::uint64_t>(m.rows()), 4);
  put_le(out, static_cast<std::uint64_t>(m.cols()), 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_le(out, std::bit_cast<std::uint64_t>(m(r, c)), 8);
  if (!out) throw std::runtime_error("write_matrix: write failed");
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("read_matrix: bad magic");
  }
  const auto rows = static_cast<Eigen::Index>(get_le(in, 4));
  const auto cols = static_cast<Eigen::Index>(get_le(in, 4));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = std::bit_cast<double>(get_le(in, 8));
  return m;
}

void save_factorization(const std::filesystem::path& path, const FeatureFactorization& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_matrix(out, f.u);
  write_matrix(out, f.s.transpose());
  write_matrix(out, f.v);
}

FeatureFactorization load_factorization(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  FeatureFactorization f;
  f.u = read_matrix(in);
  const Eigen::MatrixXd s = read_matrix(in);
  f.v = read_matrix(in);
  if (s.rows() != 1 || s.cols() != f.u.cols() || s.cols() != f.v.cols()) {
    throw std::runtime_error("factorization file: inconsistent blocks");
  }
  f.s = s.row(0).transpose();
  return f;
}

}  // namespace ubmbandit
