#pragma once

// CRT3 tensor files: the 4 magic bytes "CRT3", three little-endian uint64
// dimensions (I, J, K), then I*J*K little-endian IEEE-754 doubles in (i, j, k)
// row-major order.

#include <filesystem>
#include <iosfwd>

#include "corap/tensor.hpp"

namespace corap {

void write_tensor(std::ostream& out, const Tensor3d& t);
Tensor3d read_tensor(std::istream& in);

void write_tensor(const std::filesystem::path& path, const Tensor3d& t);
Tensor3d read_tensor(const std::filesystem::path& path);

/// Plain comma-separated matrix text, one row per line, 17 significant digits.
void write_matrix_csv(const std::filesystem::path& path, const Matrix<double>& m);
Matrix<double> read_matrix_csv(const std::filesystem::path& path);

}  // namespace corap
