#pragma once

#include <span>
#include <vector>

#include "blockrg/interaction.hpp"
#include "blockrg/lattice.hpp"

namespace blockrg {

/// Analytic context shared by the high-temperature bounds: norm parameter r,
/// cluster weight base M in (1, e^r), block cardinality s, interaction norm,
/// and the finite-range data (range S, body bound D). Derived quantities:
/// epsilon = M e^{-r}, c = 1/sqrt(epsilon) - 1, rho = 2 s ||J||_r / c^2.
struct BoundsContext {
  double r = 1.0;
  double M = 2.0;
  int s = 1;
  double norm_j = 0.0;
  int D = 1;
  double S = 0.0;

  double epsilon = 0.0;
  double c = 0.0;

  static BoundsContext make(double r, double M, int s, double norm_j, int D, double S);

  double rho() const { return 2.0 * s * norm_j / (c * c); }
  double log_m() const;
};

/// Closed-form high-temperature threshold log(M) c^2 / (2s (c + log M)).
/// ||J||_r below it implies the per-site polymer condition.
double threshold(const BoundsContext& ctx);

/// a-bar_n: the equality version of the rooted-hypergraph recursion, plus the
/// closed bound c rho^n (valid when rho < 1).
struct AbarResult {
  double recursion = 0.0;
  double closed = 0.0;
  bool closed_valid = false;
};
std::vector<AbarResult> a_bar_table(const BoundsContext& ctx, int n_max);
AbarResult a_bar(const BoundsContext& ctx, int n);

/// Solves w = 2s||J||_r z eps(1+w)/(1-eps(1+w)) for w in [0, c] by bisection
/// on the monotone inverse; z must lie within the convergence radius
/// c^2/(2s||J||_r).
struct GeneratingCheck {
  double w = 0.0;
  double residual = 0.0;
};
GeneratingCheck generating_check(const BoundsContext& ctx, double z);
double generating_radius(const BoundsContext& ctx);

/// Tail bound eps(P) = c rho^{P/D} / (1 - rho); requires rho < 1.
double eps_tail(const BoundsContext& ctx, double P);

/// Band bound
///   M^D (1+log M)^D (eps(P)/log M + (eps(Q)+eps(Kc)) (1+P) D M^{(1+P)D}),
/// applicable beyond the activation distance S (|W| P + Q Kc).
struct BandBound {
  double value = 0.0;
  double activation_distance = 0.0;
};
BandBound band_bound(const BoundsContext& ctx, int w_body, double P, double Q, double Kc);

/// Sub-exponential decay profile: at each distance l the band bound evaluated
/// at P = (l/2S)^alpha / |W| and Q = Kc = (l/2S)^beta, 0 < alpha < beta <= 1/2.
/// fitted_c is the smallest constant with bound(l) <= fitted_c exp(-l^alpha')
/// over the tabulated l.
struct SubexpRow {
  double l = 0.0, P = 0.0, Q = 0.0, bound = 0.0, activation = 0.0;
};
struct SubexpProfile {
  std::vector<SubexpRow> rows;
  double alpha_prime = 0.0;
  double fitted_c = 0.0;
  bool eventually_decreasing = false;  // strict decrease over the latter half
};
SubexpProfile subexp_profile(const BoundsContext& ctx, int w_body, double alpha,
                             double beta, std::span<const double> ls);

/// n(E): number of distinct translation-invariant supports within image
/// distance E of Z.
long long count_supports(const Blocking& b, const ImageSet& Z, double E,
                         std::span<const Generator> shapes);

/// Majorant series sum_{n>=0} exp(-n^alpha) (n+1)^d for the linearization
/// bound, summed until the integral-test tail bound drops below tail_tol.
double linearization_majorant(double alpha, int d, double tail_tol = 1e-10);

}  // namespace blockrg
