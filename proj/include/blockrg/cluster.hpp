#pragma once

#include <map>
#include <mutex>
#include <span>

#include "blockrg/polymer.hpp"

namespace blockrg {

/// Extract the bits of `full` at the set positions of `at`, packed ascending.
SpinMask subbits_mask(SpinMask full, SpinMask at);
/// Inverse of subbits_mask: spread `packed` over the set positions of `at`.
SpinMask scatter_mask(SpinMask packed, SpinMask at);

/// Memoized Ursell coefficients C(N_1,...,N_p): the signed sum over connected
/// graphs on {1..p} with edges allowed only between overlapping supports.
/// Keyed on the overlap-pattern bitmask; safe for concurrent lookup.
class UrsellCache {
 public:
  static constexpr int kMaxP = 7;

  long long coefficient(std::span<const ImageSet> supports);
  long long coefficient_pattern(int p, std::uint32_t overlap_bits);

  static int pair_bit(int i, int j, int p);  // i < j

 private:
  std::mutex mu_;
  std::map<std::pair<int, std::uint32_t>, long long> memo_;
};

long long ursell(std::span<const ImageSet> supports, UrsellCache& cache);

struct ClusterFilter {
  int support_cap = 1 << 20;  // drop polymers with |N| above this (the u_N substitution)
};

/// Truncated cluster sum  sum_{p<=p_max} (1/p!) sum_{N_1..N_p} C w_{N_1}...w_{N_p}
/// over ordered tuples with repetition, aggregated by the combined support
/// U = union N_i. Tables are indexed by sigma' bits local to U.
class ClusterSum {
 public:
  ClusterSum(const std::vector<Polymer>& polymers, int nblocks, int p_max,
             UrsellCache& cache, ClusterFilter filter = {}, int threads = 1);

  /// Value of the full sum at a window-wide sigma' mask.
  double eval(SpinMask sigma_prime) const;
  /// Same, restricted to clusters whose combined support intersects target.
  double eval_touching(SpinMask target, SpinMask sigma_prime) const;
  /// Union of combined supports intersecting target.
  SpinMask support_union(SpinMask target) const;

  const std::map<SpinMask, std::vector<double>>& by_support() const { return groups_; }
  const std::vector<long long>& term_counts() const { return term_counts_; }
  int nblocks() const { return nblocks_; }

 private:
  int nblocks_;
  std::map<SpinMask, std::vector<double>> groups_;
  std::vector<long long> term_counts_;  // contributing tuples per order p
};

/// Truncated frozen-block-spin free energy log W(sigma').
double log_w_expansion(const std::vector<Polymer>& polymers, SpinMask sigma_prime,
                       int p_max, UrsellCache& cache);

/// Renormalized couplings from the cluster expansion. Every cluster is
/// Fourier-transformed locally over its combined support, so J'(Z) receives
/// contributions only from clusters whose support contains Z; untouched Z
/// are structurally absent.
struct ExpansionCouplings {
  std::map<ImageSet, double> coef;
  double at(const ImageSet& Z) const {
    auto it = coef.find(Z);
    return it == coef.end() ? 0.0 : it->second;
  }
  bool touched(const ImageSet& Z) const { return coef.count(Z) > 0; }
};
ExpansionCouplings expansion_couplings(const std::vector<Polymer>& polymers, int nblocks,
                                       int p_max, UrsellCache& cache, int threads = 1);

/// Kotecky-Preiss sufficient condition, per image site:
/// S(y) = sum_{N owning y} sup_{sigma'} |w_N| M^{|N|} <= log M.
struct KpSite {
  BlockId y;
  double sum;
  bool pass;
};
struct KpReport {
  double M = 0.0;
  double log_m = 0.0;
  std::vector<KpSite> sites;
  bool all_pass = false;
};
KpReport kp_check(const std::vector<Polymer>& polymers, double M, const Blocking& b);

/// exp(-sum of clusters touching Y), the expansion side of the avoidance
/// probability.
double avoidance_ratio(const std::vector<Polymer>& polymers, const ImageSet& Y,
                       SpinMask sigma_prime, int p_max, UrsellCache& cache);
double avoidance_ratio(const ClusterSum& cs, const ImageSet& Y, SpinMask sigma_prime);

/// F(Q,K): the avoidance exponent with polymer supports capped at Q and
/// cluster length capped at length_cap, exponentiated.
double truncated_f(const std::vector<Polymer>& polymers, const ImageSet& target,
                   int support_cap, int length_cap, SpinMask sigma_prime,
                   UrsellCache& cache);

/// Expansion-side partial derivative dJ'(Z)/dJ(W), evaluated through the
/// decorated-weight representation with a local Fourier transform per R, plus
/// the a-priori bound M^|W| (1+log M)^|W| and the per-case magnitudes of the
/// |R| <= |W| P_split vs |R| > |W| P_split split.
struct JacobianExpansion {
  double value = 0.0;
  double apriori_bound = 0.0;
  double small_r_magnitude = 0.0;  // |R| <= |W| * split
  double large_r_magnitude = 0.0;  // |R| >  |W| * split
  double split = 0.0;
};
JacobianExpansion expansion_jacobian(const System& sys, const ImageSet& Z,
                                     const SiteSet& W, const PolymerCaps& caps,
                                     int p_max, double M, double p_split,
                                     UrsellCache& cache);

}  // namespace blockrg
