#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <sstream>

#include "ubmbandit/matrix_io.hpp"

using namespace ubmbandit;

TEST_CASE("matrix blocks round-trip exactly") {
  Eigen::MatrixXd m(2, 3);
  m << 1.0, -2.5, 1e-300, 0.1, 3.0e10, -0.0;
  std::stringstream buf;
  write_matrix(buf, m);
  CHECK(buf.str().size() == 16 + 6 * 8);
  CHECK(buf.str().substr(0, 8) == "UBMMAT01");
  // Row-major: the second value on disk is m(0,1).
  double second = 0.0;
  std::memcpy(&second, buf.str().data() + 16 + 8, 8);
  CHECK(second == -2.5);
  const auto back = read_matrix(buf);
  CHECK(back == m);
}

TEST_CASE("malformed blocks are rejected") {
  std::stringstream bad("XXXXXXXX\x01\0\0\0\x01\0\0\0");
  CHECK_THROWS(read_matrix(bad));
  std::stringstream buf;
  write_matrix(buf, Eigen::MatrixXd::Ones(3, 3));
  std::stringstream truncated(buf.str().substr(0, 40));
  CHECK_THROWS(read_matrix(truncated));
}

TEST_CASE("factorization files") {
  FeatureFactorization f;
  f.u = Eigen::MatrixXd::Random(5, 2);
  f.s = Eigen::Vector2d(3.0, 1.0);
  f.v = Eigen::MatrixXd::Random(4, 2);
  const auto path = std::filesystem::temp_directory_path() / "ubmbandit_test_fact.bin";
  save_factorization(path, f);
  const auto back = load_factorization(path);
  CHECK(back.u == f.u);
  CHECK(back.s == f.s);
  CHECK(back.v == f.v);

  {
    std::ofstream out(path, std::ios::binary);
    write_matrix(out, f.u);
    write_matrix(out, Eigen::MatrixXd::Ones(1, 3));
    write_matrix(out, f.v);
  }
  CHECK_THROWS(load_factorization(path));
  std::filesystem::remove(path);
  CHECK_THROWS(load_factorization(path));
}
