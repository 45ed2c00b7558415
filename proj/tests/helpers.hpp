#pragma once

#include <random>

#include "blockrg/exact.hpp"

namespace blockrg::testing {

/// 1D chain: window [nsites], blocks of 2, decimation at the first site of
/// each block, nearest-neighbor bonds of strength k.
inline System chain_system(int nsites, double k) {
  Blocking b({nsites}, {2});
  Interaction j;
  for (int i = 0; i + 1 < nsites; ++i) j.add(SiteSet{i, i + 1}, k);
  return System(std::move(b), Kernel::decimation(2, 0), std::move(j));
}

/// Single block {0,1} with one bond inside it.
inline System one_block_system(double k) {
  Blocking b({2}, {2});
  Interaction j;
  j.add(SiteSet{0, 1}, k);
  return System(std::move(b), Kernel::decimation(2, 0), std::move(j));
}

/// Random kernel satisfying symmetry and normalization (so all axioms).
inline Kernel random_valid_kernel(std::mt19937& rng, int s) {
  const std::uint32_t ncfg = 1u << s;
  const std::uint32_t full = ncfg - 1;
  std::vector<double> t(size_t{1} << (s + 1), -1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (std::uint32_t cfg = 0; cfg < ncfg; ++cfg) {
    if (t[(cfg << 1) | 0] >= 0.0) continue;
    const double v = u(rng);
    t[(cfg << 1) | 0] = v;
    t[(cfg << 1) | 1] = 2.0 - v;
    t[((cfg ^ full) << 1) | 0] = 2.0 - v;
    t[((cfg ^ full) << 1) | 1] = v;
  }
  return Kernel::custom(s, std::move(t), "random-valid");
}

inline Interaction random_even_interaction(std::mt19937& rng, int nsites, int nterms,
                                           double scale) {
  std::uniform_int_distribution<std::int32_t> site(0, nsites - 1);
  std::uniform_real_distribution<double> val(-scale, scale);
  Interaction j;
  for (int t = 0; t < nterms; ++t) {
    std::vector<std::int32_t> ids;
    const int pairs = 1 + static_cast<int>(rng() % 2);
    for (int i = 0; i < 2 * pairs; ++i) ids.push_back(site(rng));
    SiteSet x(std::move(ids));
    if (x.size() % 2 == 0 && !x.empty()) j.add(x, val(rng));
  }
  return j;
}

}  // namespace blockrg::testing
