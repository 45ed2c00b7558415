#pragma once

#include <map>
#include <span>
#include <vector>

#include "blockrg/lattice.hpp"
#include "blockrg/types.hpp"

namespace blockrg {

/// Sparse real interaction: support -> coupling constant J(X). Only nonzero
/// couplings are stored; the empty set is not a valid support (it would only
/// shift log W by a constant).
class Interaction {
 public:
  /// Couplings below this magnitude are dropped at ingestion, keeping the
  /// hypergraph of supports finite and well-defined.
  static constexpr double kMinCoupling = 1e-15;

  Interaction() = default;

  /// Accumulates into an existing entry; the entry is removed if the result
  /// falls below kMinCoupling.
  void add(const SiteSet& support, double value);

  bool empty() const { return terms_.empty(); }
  int size() const { return static_cast<int>(terms_.size()); }
  const std::map<SiteSet, double>& couplings() const { return terms_; }
  double value(const SiteSet& support) const;

  /// Max |X| over stored supports (0 for the zero interaction).
  int max_body() const;
  /// Max diameter over stored supports (0 for the zero interaction).
  double range(const Blocking& b) const;

 private:
  std::map<SiteSet, double> terms_;
};

/// Perturbation argument of the RG linearization; same shape as Interaction.
using Direction = Interaction;

/// Banach norm sup_x sum_{X: x in X} |J(X)| e^{r|X|}; 0 for the zero
/// interaction. r must be positive.
double norm_r(const Interaction& J, double r);

/// Product of sigma over X; +1 for the empty set.
int spin_product(SpinMask sigma, const SiteSet& X);

/// sum_X J(X) sigma_X, i.e. -H(sigma) under H = -sum J(X) sigma_X.
double exponent(const Interaction& J, SpinMask sigma);

/// One translation-invariant generator: a shape of coordinate offsets placed
/// at every admissible base point, with one coupling value.
struct Generator {
  std::vector<std::vector<int>> offsets;
  double value = 0.0;
};

/// Places each generator at every translate inside the window (free boundary)
/// or at every base point with wrapped coordinates (periodic). A generator of
/// diameter beyond range_cap is a config error; pass a negative cap to skip
/// the check.
Interaction generate_translation_invariant(std::span<const Generator> shapes,
                                           const Blocking& b,
                                           bool periodic = false,
                                           double range_cap = -1.0);

/// Maximum cardinality of a set of diameter <= S under the sup-metric in d
/// dimensions: (S+1)^d.
long long finite_body_constant(int S, int d);

/// Mask/value form used by the enumeration engines (site ids must be < 64).
struct CompiledInteraction {
  std::vector<std::pair<SpinMask, double>> terms;
  double eval(SpinMask sigma) const {
    double acc = 0.0;
    for (const auto& [m, v] : terms) acc += (std::popcount(sigma & m) & 1) ? -v : v;
    return acc;
  }
};
CompiledInteraction compile(const Interaction& J);

}  // namespace blockrg
