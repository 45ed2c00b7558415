#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blockrg/lattice.hpp"

namespace blockrg {

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& data);

/// Shortest round-trip decimal form of a double; deterministic across runs.
std::string format_double(double v);

/// Tab-separated table with leading '#' preamble lines, one header row, and a
/// trailing "# checksum" line covering every preceding byte.
class TableWriter {
 public:
  explicit TableWriter(std::vector<std::string> columns);
  void preamble(const std::string& key, const std::string& value);
  void row(const std::vector<std::string>& cells);
  std::string render() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> preamble_, columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Verifies the trailing checksum line of a rendered table.
bool table_checksum_ok(const std::string& rendered);

// Set encodings used in emitted tables: sites as semicolon-joined coordinate
// tuples "(c1,c2)"; image sites as block index plus block coordinates
// "y3(1,0)". The empty set is "-".
std::string encode_site_set(const SiteSet& X, const Blocking& b);
std::string encode_image_set(const ImageSet& Z, const Blocking& b);
SiteSet decode_site_set(const std::string& text, const Blocking& b);
ImageSet decode_image_set(const std::string& text, const Blocking& b);

/// Block-spin assignment as a +/- string, ascending block id.
std::string encode_spins(SpinMask m, int n);

}  // namespace blockrg
