#include "sculptor/matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sculptor/error.hpp"

namespace sculptor {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

namespace {

void put_u32le(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32le(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_matrix_file(const std::filesystem::path& path, const std::string& magic,
                       const FeatureMatrix& matrix, const std::vector<std::string>& ids) {
  if (ids.size() != matrix.rows)
    throw ValidationError("matrix/id count mismatch: " + std::to_string(matrix.rows) + " rows vs " +
                          std::to_string(ids.size()) + " ids");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());

  out.write(magic.data(), 5);
  put_u32le(out, static_cast<std::uint32_t>(matrix.rows));
  put_u32le(out, static_cast<std::uint32_t>(matrix.cols));
  for (double v : matrix.data) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(out, bits);
  }
  for (const auto& id : ids) {
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    out.put('\n');
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

MatrixFile read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path.string());

  char magic[6] = {};
  in.read(magic, 5);
  if (!in) throw ValidationError("truncated matrix file: " + path.string());
  MatrixFile file;
  file.magic = magic;
  if (file.magic != kStructMagic && file.magic != kEmbeddingMagic)
    throw ValidationError("unrecognized matrix magic '" + file.magic + "' in " + path.string());

  const std::uint32_t rows = get_u32le(in);
  const std::uint32_t cols = get_u32le(in);
  if (!in) throw ValidationError("truncated matrix header: " + path.string());

  file.matrix = FeatureMatrix(rows, cols);
  for (std::size_t i = 0; i < file.matrix.data.size(); ++i) {
    const std::uint32_t bits = get_u32le(in);
    if (!in) throw ValidationError("truncated matrix payload: " + path.string());
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f))
      throw ValidationError("non-finite value at row " + std::to_string(i / std::max<std::size_t>(cols, 1)) +
                            " in " + path.string());
    file.matrix.data[i] = static_cast<double>(f);
  }

  file.ids.reserve(rows);
  std::string line;
  for (std::uint32_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw ValidationError("id list truncated at line " + std::to_string(i + 1) + " in " + path.string());
    file.ids.push_back(line);
  }
  return file;
}

}  // namespace sculptor
