#include "corap/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace corap {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'R', 'T', '3'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw std::runtime_error("CRT3: truncated file");
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | bytes[b];
  return v;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor3d& t) {
  out.write(kMagic.data(), kMagic.size());
  for (Index d : t.dims()) put_u64(out, static_cast<std::uint64_t>(d));
  for (Index n = 0; n < t.size(); ++n) put_u64(out, std::bit_cast<std::uint64_t>(t.data()[n]));
  if (!out) throw std::runtime_error("CRT3: write failed");
}

Tensor3d read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw std::runtime_error("CRT3: bad magic bytes");
  Dims3 dims{};
  for (auto& d : dims) {
    const std::uint64_t v = get_u64(in);
    if (v == 0 || v > (std::uint64_t{1} << 31)) throw std::runtime_error("CRT3: bad dimension");
    d = static_cast<Index>(v);
  }
  Tensor3d t(dims);
  for (Index n = 0; n < t.size(); ++n) t.data()[n] = std::bit_cast<double>(get_u64(in));
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor3d& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

Tensor3d read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_tensor(in);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix<double>& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  char buf[40];
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

Matrix<double> read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path.string() + ": ragged matrix");
    rows.push_back(std::move(row));
  }
  Matrix<double> m(static_cast<Index>(rows.size()),
                   rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace corap
