#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "blockrg/interaction.hpp"
#include "blockrg/kernel.hpp"
#include "blockrg/lattice.hpp"

namespace blockrg {

/// The lattice system all engines consume: a blocking, a per-block kernel and
/// an interaction. Immutable after construction and freely shared across
/// workers.
struct System {
  Blocking blocking;
  Kernel kernel;
  Interaction interaction;

  System(Blocking b, Kernel k, Interaction j);
};

struct ExactOptions {
  int site_cap = 24;    // refuse brute force beyond 2^site_cap spin sums
  int image_cap = 20;   // refuse full image-window tables beyond this
  int work_cap = 30;    // refuse when |window| + |image| exceeds this
  int threads = 1;
};

/// Renormalized couplings J'(Z) for every Z in the image window, including
/// the empty set, stored as a dense table indexed by the Z bitmask.
class RenormalizedInteraction {
 public:
  RenormalizedInteraction(int nblocks, std::vector<double> coef);
  int nblocks() const { return nblocks_; }
  double at(const ImageSet& Z) const { return coef_[Z.mask()]; }
  double at_mask(SpinMask z) const { return coef_[z]; }
  const std::vector<double>& coefficients() const { return coef_; }

 private:
  int nblocks_;
  std::vector<double> coef_;  // size 2^nblocks
};

/// Sparse table of partial derivatives dJ'(Z)/dJ(W) plus the list of W
/// supports it covers.
class JacobianTable {
 public:
  void insert(const ImageSet& Z, const SiteSet& W, double v);
  void note_support(const SiteSet& W);
  std::optional<double> find(const ImageSet& Z, const SiteSet& W) const;
  bool covers(const SiteSet& W) const;
  const std::vector<SiteSet>& included_supports() const { return supports_; }
  const std::map<std::pair<ImageSet, SiteSet>, double>& entries() const { return entries_; }

 private:
  std::map<std::pair<ImageSet, SiteSet>, double> entries_;
  std::vector<SiteSet> supports_;  // sorted
};

/// Frozen-block-spin partition function
///   W(sigma') = avg_sigma prod_y T_y(sigma, sigma'_y) exp(sum_X J(X) sigma_X)
/// for one block-spin configuration.
double frozen_partition(const System& sys, SpinMask sigma_prime,
                        const ExactOptions& opt = {});

/// W(sigma') for every block-spin configuration, indexed by mask.
std::vector<double> frozen_partition_table(const System& sys,
                                           const ExactOptions& opt = {});

/// J'(Z) = avg_{sigma'} sigma'_Z log W(sigma') for every Z, via a
/// Walsh-Hadamard butterfly over the log W table.
RenormalizedInteraction renormalized_couplings(const System& sys,
                                               const ExactOptions& opt = {});

/// dJ'(Z)/dJ(W) for all Z at once: the constrained correlation
/// avg_{sigma'} sigma'_Z <sigma_W>_{sigma'}, the ratio taken per sigma' and
/// then Fourier-summed. Indexed by Z mask.
std::vector<double> jacobian_row(const System& sys, const SiteSet& W,
                                 const ExactOptions& opt = {});

double jacobian_exact(const System& sys, const ImageSet& Z, const SiteSet& W,
                      const ExactOptions& opt = {});

/// Central finite difference of renormalized_couplings in the direction of a
/// unit coupling on W; the independent oracle for jacobian_exact.
double jacobian_fd(const System& sys, const ImageSet& Z, const SiteSet& W,
                   double step = 1e-4, const ExactOptions& opt = {});

/// Exact Jacobian rows for each W, keeping Z entries with |Z| <= z_max_body.
JacobianTable jacobian_table(const System& sys, std::span<const SiteSet> ws,
                             int z_max_body, const ExactOptions& opt = {});

/// L(J)K(Z) = sum_W dJ'(Z)/dJ(W) K(W) over the direction's support.
/// A support missing from the table is a coverage error.
double apply_linearization(const JacobianTable& jac, const Direction& K,
                           const ImageSet& Z);

/// In-place Walsh-Hadamard transform; out[S] = sum_x (-1)^{popcount(S&x)} v[x].
void walsh_hadamard(std::vector<double>& v);

/// Max over sigma' of |sum_Z J'(Z) sigma'_Z - log W(sigma')|.
double inversion_residual(const RenormalizedInteraction& jp,
                          const std::vector<double>& w_table);

}  // namespace blockrg
