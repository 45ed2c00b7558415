#include "blockrg/bounds.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace blockrg {

BoundsContext BoundsContext::make(double r, double M, int s, double norm_j, int D,
                                  double S) {
  if (r <= 0.0) throw std::domain_error("norm parameter r must be positive");
  if (!(M > 1.0 && M < std::exp(r)))
    throw std::domain_error("cluster weight base M must lie in (1, e^r)");
  if (s < 1) throw std::domain_error("block cardinality must be positive");
  if (norm_j < 0.0) throw std::domain_error("interaction norm cannot be negative");
  if (D < 1) throw std::domain_error("body bound D must be positive");
  if (S < 0.0) throw std::domain_error("range S cannot be negative");
  BoundsContext ctx;
  ctx.r = r;
  ctx.M = M;
  ctx.s = s;
  ctx.norm_j = norm_j;
  ctx.D = D;
  ctx.S = S;
  ctx.epsilon = M * std::exp(-r);
  ctx.c = 1.0 / std::sqrt(ctx.epsilon) - 1.0;
  return ctx;
}

double BoundsContext::log_m() const { return std::log(M); }

double threshold(const BoundsContext& ctx) {
  const double lm = ctx.log_m();
  return lm * ctx.c * ctx.c / (2.0 * ctx.s * (ctx.c + lm));
}

namespace {

/// Number of compositions j = n_1 + ... + n_k (n_i >= 1) weighted by
/// abar_{n_1} ... abar_{n_k}: iterated convolution powers of abar.
std::vector<std::vector<double>> composition_weights(const std::vector<double>& abar,
                                                     int j_max, int k_max) {
  std::vector<std::vector<double>> B(static_cast<size_t>(k_max) + 1,
                                     std::vector<double>(static_cast<size_t>(j_max) + 1, 0.0));
  B[0][0] = 1.0;
  for (int k = 1; k <= k_max; ++k)
    for (int j = k; j <= j_max; ++j) {
      double acc = 0.0;
      for (int m = 1; m <= j - k + 1 && m < static_cast<int>(abar.size()); ++m)
        acc += B[static_cast<size_t>(k - 1)][static_cast<size_t>(j - m)] *
               abar[static_cast<size_t>(m)];
      B[static_cast<size_t>(k)][static_cast<size_t>(j)] = acc;
    }
  return B;
}

double binomial(int m, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (m - k + i) / i;
  return b;
}

}  // namespace

std::vector<AbarResult> a_bar_table(const BoundsContext& ctx, int n_max) {
  if (n_max < 1) throw std::domain_error("n_max must be positive");
  const double eps = ctx.epsilon;
  const double pre = 2.0 * ctx.s * ctx.norm_j;
  const double rho = ctx.rho();
  const bool rho_ok = rho < 1.0;

  std::vector<double> abar(static_cast<size_t>(n_max) + 1, 0.0);  // abar[0] unused
  std::vector<AbarResult> out(static_cast<size_t>(n_max) + 1);
  for (int n = 1; n <= n_max; ++n) {
    auto B = composition_weights(abar, n - 1, n - 1);
    // sum over m of eps^m sum_{k<=min(m,n-1)} C(m,k) B_k(n-1), truncated once
    // the geometric tail is machine-negligible
    double total = 0.0;
    double eps_m = 1.0;
    for (int m = 1;; ++m) {
      eps_m *= eps;
      double inner = 0.0;
      for (int k = 0; k <= std::min(m, n - 1); ++k) {
        const double bk = (k == 0) ? (n == 1 ? 1.0 : 0.0)
                                   : B[static_cast<size_t>(k)][static_cast<size_t>(n - 1)];
        if (bk != 0.0) inner += binomial(m, k) * bk;
      }
      const double term = eps_m * inner;
      total += term;
      if (m > n && term <= 1e-16 * total) break;
      if (m > 10000) break;
    }
    abar[static_cast<size_t>(n)] = pre * total;
    out[static_cast<size_t>(n)].recursion = abar[static_cast<size_t>(n)];
    out[static_cast<size_t>(n)].closed_valid = rho_ok;
    out[static_cast<size_t>(n)].closed = rho_ok ? ctx.c * std::pow(rho, n) : 0.0;
  }
  out.erase(out.begin());  // 1-based table
  return out;
}

AbarResult a_bar(const BoundsContext& ctx, int n) {
  return a_bar_table(ctx, n).back();
}

double generating_radius(const BoundsContext& ctx) {
  if (ctx.norm_j <= 0.0) return std::numeric_limits<double>::infinity();
  return ctx.c * ctx.c / (2.0 * ctx.s * ctx.norm_j);
}

GeneratingCheck generating_check(const BoundsContext& ctx, double z) {
  if (z < 0.0) throw std::domain_error("z must be nonnegative");
  if (z > generating_radius(ctx) * (1.0 + 1e-12))
    throw std::domain_error("z lies beyond the convergence radius");
  const double eps = ctx.epsilon;
  const double z1 = 2.0 * ctx.s * ctx.norm_j * z;
  auto z1_of = [&](double w) { return w * (1.0 - eps * (1.0 + w)) / (eps * (1.0 + w)); };

  double lo = 0.0, hi = ctx.c;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, ctx.c); ++it) {
    const double mid = (lo + hi) / 2.0;
    (z1_of(mid) < z1 ? lo : hi) = mid;
  }
  GeneratingCheck res;
  res.w = (lo + hi) / 2.0;
  const double rhs = z1 * eps * (1.0 + res.w) / (1.0 - eps * (1.0 + res.w));
  res.residual = std::abs(res.w - rhs);
  return res;
}

double eps_tail(const BoundsContext& ctx, double P) {
  if (P < 0.0) throw std::domain_error("P must be nonnegative");
  const double rho = ctx.rho();
  if (rho >= 1.0) throw std::domain_error("eps tail needs rho < 1 (threshold regime)");
  return ctx.c * std::pow(rho, P / ctx.D) / (1.0 - rho);
}

BandBound band_bound(const BoundsContext& ctx, int w_body, double P, double Q, double Kc) {
  if (w_body < 1) throw std::domain_error("|W| must be positive");
  if (P <= 0.0 || Q <= 0.0 || Kc <= 0.0)
    throw std::domain_error("P, Q, Kc must be positive");
  const double lm = ctx.log_m();
  const double prefactor = std::pow(ctx.M, ctx.D) * std::pow(1.0 + lm, ctx.D);
  const double inner = eps_tail(ctx, P) / lm +
                       (eps_tail(ctx, Q) + eps_tail(ctx, Kc)) * (1.0 + P) * ctx.D *
                           std::pow(ctx.M, (1.0 + P) * ctx.D);
  BandBound b;
  b.value = prefactor * inner;
  b.activation_distance = ctx.S * (w_body * P + Q * Kc);
  return b;
}

SubexpProfile subexp_profile(const BoundsContext& ctx, int w_body, double alpha,
                             double beta, std::span<const double> ls) {
  if (!(0.0 < alpha && alpha < beta && beta <= 0.5))
    throw std::domain_error("exponents must satisfy 0 < alpha < beta <= 1/2");
  if (ctx.S <= 0.0) throw std::domain_error("profile needs a positive range S");
  SubexpProfile prof;
  prof.alpha_prime = alpha / 2.0;
  for (double l : ls) {
    if (l <= 0.0) throw std::domain_error("distances must be positive");
    SubexpRow row;
    row.l = l;
    row.P = std::pow(l / (2.0 * ctx.S), alpha) / w_body;
    row.Q = std::pow(l / (2.0 * ctx.S), beta);
    auto b = band_bound(ctx, w_body, row.P, row.Q, row.Q);
    row.bound = b.value;
    row.activation = b.activation_distance;
    prof.rows.push_back(row);
  }
  for (const auto& row : prof.rows)
    prof.fitted_c = std::max(prof.fitted_c,
                             row.bound * std::exp(std::pow(row.l, prof.alpha_prime)));
  prof.eventually_decreasing = prof.rows.size() >= 2;
  for (size_t i = prof.rows.size() / 2; i + 1 < prof.rows.size(); ++i)
    if (prof.rows[i + 1].bound >= prof.rows[i].bound) prof.eventually_decreasing = false;
  return prof;
}

long long count_supports(const Blocking& b, const ImageSet& Z, double E,
                         std::span<const Generator> shapes) {
  if (Z.empty()) throw std::domain_error("Z must be nonempty");
  if (E < 0.0) throw std::domain_error("E must be nonnegative");
  Interaction family = generate_translation_invariant(shapes, b);
  std::set<SiteSet> counted;
  for (const auto& [W, v] : family.couplings())
    if (image_distance(W, Z, b) <= E) counted.insert(W);
  return static_cast<long long>(counted.size());
}

double linearization_majorant(double alpha, int d, double tail_tol) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::domain_error("alpha must lie in (0, 1/2)");
  if (d < 1) throw std::domain_error("dimension must be positive");
  if (tail_tol <= 0.0) throw std::domain_error("tail tolerance must be positive");

  // Integral-test tail, valid once the summand decreases (alpha n^alpha >= d):
  //   sum_{m>n} e^{-m^a}(m+1)^d <= (2^d/a) Gamma(k+1, n^a),  k = ceil(d/a) + ceil(1/a) - 1,
  // with the closed form of the upper incomplete gamma at integer k.
  const int k = static_cast<int>(std::ceil(d / alpha)) +
                static_cast<int>(std::ceil(1.0 / alpha)) - 1;
  auto tail_bound = [&](double n) {
    const double u = std::pow(n, alpha);
    double sum = 0.0, term = std::exp(-u);  // e^{-u} u^j / j!
    for (int j = 0; j <= k; ++j) {
      sum += term;
      term *= u / (j + 1);
    }
    double kfact = 1.0;
    for (int j = 2; j <= k; ++j) kfact *= j;
    return std::pow(2.0, d) / alpha * kfact * sum;
  };

  const double decreasing_from = std::pow(d / alpha, 1.0 / alpha);
  double total = 0.0;
  for (long long n = 0;; ++n) {
    const double t = std::exp(-std::pow(static_cast<double>(n), alpha)) *
                     std::pow(static_cast<double>(n) + 1.0, d);
    total += t;
    if (n % 1024 == 0 && static_cast<double>(n) * alpha >= 1.0 &&
        static_cast<double>(n) >= decreasing_from &&
        tail_bound(static_cast<double>(n)) < tail_tol)
      break;
    if (n > (1LL << 34)) throw NumericError("majorant series failed to converge");
  }
  return total;
}

}  // namespace blockrg
