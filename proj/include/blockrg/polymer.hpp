#pragma once

#include <vector>

#include "blockrg/exact.hpp"

namespace blockrg {

struct PolymerCaps {
  int n_max = 6;                     // max links per hypergraph
  int q_cap = 8;                     // max image-support cardinality
  long long guard = 10'000'000;      // abort past this many hypergraphs
};

/// A block-connected unit of the expansion: image support N and the weight
/// w_N as a table over the 2^|N| block-spin assignments on N (bit i of the
/// index = i-th element of N, set meaning spin -1).
struct Polymer {
  ImageSet support;
  std::vector<double> table;
  std::vector<long long> link_hist;  // contributing hypergraphs by link count

  double sup_abs() const;
  /// Weight at a window-wide sigma' mask.
  double at(SpinMask sigma_prime) const { return table[subbits(sigma_prime, support)]; }
};

/// sigma_W-decorated unit: image support R (possibly empty), insertion set W,
/// weight table over block-spin assignments on R union W'.
struct DecoratedPolymer {
  ImageSet support;    // R
  SiteSet insertion;   // W
  ImageSet domain;     // R union W'
  std::vector<double> table;
  std::vector<long long> link_hist;

  double at(SpinMask sigma_prime) const { return table[subbits(sigma_prime, domain)]; }
};

/// Contribution of one block-connected hypergraph with image support N:
/// the normalized sum over spins on N's blocks of
///   prod_{y in N} T_y(sigma, sigma'_y) * prod_{X in gamma} (e^{J(X) sigma_X} - 1).
/// sigma' is passed as local bits on N. The hypergraph must be
/// block-connected with image support exactly N.
double alpha(const System& sys, const ImageSet& N, const Hypergraph& gamma,
             SpinMask sigma_prime_on_N);

/// All polymers reachable from the interaction's support by block-connected
/// hypergraphs within the caps. Exhaustive within caps; deterministic
/// least-link rooted growth, results independent of the thread count.
std::vector<Polymer> enumerate_polymers(const System& sys, const PolymerCaps& caps,
                                        int threads = 1);

/// Decorated weights for the insertion set W: one entry per image support R
/// reachable by hypergraphs block-connected to W (including the empty one,
/// giving R = empty).
std::vector<DecoratedPolymer> decorated_weights(const System& sys, const SiteSet& W,
                                                const PolymerCaps& caps);

/// a_n(y): sum over block-connected hypergraphs with exactly n links whose
/// image support contains y of prod_X 2|J(X)| M^{|X|}. Indexed [y][n],
/// n = 1..n_max.
std::vector<std::vector<double>> rooted_contributions(const System& sys, double M,
                                                      const PolymerCaps& caps);

double rooted_contribution(const System& sys, BlockId y, int n, double M,
                           const PolymerCaps& caps);

}  // namespace blockrg
