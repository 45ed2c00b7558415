#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blockrg/types.hpp"

namespace blockrg {

/// Per-block RG probability kernel T(sigma on block, sigma'). Evaluation is a
/// table over the 2^s block configurations; the same kernel is applied to
/// every block. A block configuration is a bitmask over the block's sites in
/// ascending site order, bit set meaning spin -1.
///
/// Normalized-sum convention: sums over spin configurations are averages, so
/// a kernel satisfying the axioms has (T(sigma,+1)+T(sigma,-1))/2 = 1 and
/// decimation takes the values {0,2}.
class Kernel {
 public:
  int block_size() const { return s_; }
  const std::string& kind() const { return kind_; }

  /// spin_index 0 means sigma' = +1, 1 means sigma' = -1.
  double value(std::uint32_t cfg, int spin_index) const {
    return table_[(static_cast<size_t>(cfg) << 1) | static_cast<size_t>(spin_index)];
  }

  /// Copies the spin at one in-block position (0-based, ascending site order)
  /// into the block spin: T = 1 + sigma' * sigma_offset.
  static Kernel decimation(int s, int offset);

  /// Block spin = sign of the block's spin sum; s must be odd.
  static Kernel majority(int s);

  /// T identically 1; the trivial kernel.
  static Kernel constant(int s);

  /// Table layout: table[cfg*2 + spin_index]. Values are not checked here;
  /// run validate() to gate custom kernels.
  static Kernel custom(int s, std::vector<double> table, std::string kind = "custom");

  /// Whitespace-separated rows "bits T(sigma,+1) T(sigma,-1)", one per block
  /// configuration; bits use '1' for spin +1 and '0' for spin -1, leftmost
  /// character = first block site. '#' starts a comment.
  static Kernel from_file(const std::filesystem::path& path, int s);

 private:
  Kernel(int s, std::string kind, std::vector<double> table);
  int s_;
  std::string kind_;
  std::vector<double> table_;  // 2^s x 2
};

struct AxiomCheck {
  std::string axiom;
  bool pass = true;
  double worst_violation = 0.0;
  std::uint32_t worst_cfg = 0;  // block configuration of the worst violation
};

struct KernelReport {
  bool pass = false;
  std::vector<AxiomCheck> axioms;  // nonnegativity, symmetry, normalization, marginal
};

/// Checks nonnegativity, the symmetry condition T(s,s') = T(-s,-s'), the
/// normalization (T(s,+1)+T(s,-1))/2 = 1, and the derived per-spin marginal
/// 2^-s sum_s T(s,+1) = 1, exhaustively over all block configurations.
KernelReport validate(const Kernel& k, double tol = 1e-12);

/// Throws ValidationError carrying the failing configuration.
void require_valid(const Kernel& k, double tol = 1e-12);

}  // namespace blockrg
