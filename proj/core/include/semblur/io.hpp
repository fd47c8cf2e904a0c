#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semblur/matrix.hpp"

namespace semblur {

// Coordinate triplet text format: first line "rows cols nnz", then one
// "row col value" line per stored entry, row-major order. Values use %.17g
// so a write/read round trip is exact.
void write_triplets(const std::filesystem::path& path, const SpMat& m);
SpMat read_triplets(const std::filesystem::path& path);

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines);
std::vector<std::string> read_all_lines(const std::filesystem::path& path);

// 8-bit binary portable graymap
void write_pgm(const std::filesystem::path& path,
               const std::vector<std::uint8_t>& pixels, int width, int height);

// FNV-1a 64-bit over raw bytes; stable fingerprint for run manifests
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t h);

std::string format_double(double v);  // shortest round-trip decimal (%.17g)

}  // namespace semblur
