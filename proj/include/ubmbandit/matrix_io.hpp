#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Dense>

#include "ubmbandit/svd.hpp"

namespace ubmbandit {

// Dense matrix block: 16-byte header (8-byte magic "UBMMAT01", uint32 rows,
// uint32 cols, little-endian) followed by rows*cols row-major float64 values.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in);

// A factorization file holds three consecutive blocks: U, S (1 x rank), V.
void save_factorization(const std::filesystem::path& path, const FeatureFactorization& f);
FeatureFactorization load_factorization(const std::filesystem::path& path);

}  // namespace ubmbandit
