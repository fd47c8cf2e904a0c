#include "semblur/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "semblur/error.hpp"

namespace semblur {

void write_triplets(const std::filesystem::path& path, const SpMat& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index i = 0; i < m.outerSize(); ++i)
    for (SpMat::InnerIterator it(m, i); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << format_double(it.value())
          << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

SpMat read_triplets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Index rows = 0, cols = 0;
  std::size_t nnz = 0;
  if (!(in >> rows >> cols >> nnz))
    throw Error(ErrorCode::MalformedLine, "bad triplet header in " + path.string());
  std::vector<Triplet> trips;
  trips.reserve(nnz);
  Index r, c;
  double v;
  while (in >> r >> c >> v) trips.emplace_back(r, c, v);
  if (trips.size() != nnz)
    throw Error(ErrorCode::MalformedLine,
                "triplet count mismatch in " + path.string());
  SpMat m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<std::string> read_all_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_pgm(const std::filesystem::path& path,
               const std::vector<std::uint8_t>& pixels, int width, int height) {
  if (static_cast<std::size_t>(width) * height != pixels.size())
    throw Error(ErrorCode::DimensionMismatch, "pgm pixel count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto n = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (in.eof()) break;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace semblur
