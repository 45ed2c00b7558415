#include "blockrg/cluster.hpp"

#include <bit>
#include <cmath>

#include "blockrg/parallel.hpp"

namespace blockrg {

SpinMask subbits_mask(SpinMask full, SpinMask at) {
  SpinMask out = 0;
  int j = 0;
  while (at) {
    const int pos = std::countr_zero(at);
    at &= at - 1;
    out |= ((full >> pos) & 1u) << j;
    ++j;
  }
  return out;
}

SpinMask scatter_mask(SpinMask packed, SpinMask at) {
  SpinMask out = 0;
  int j = 0;
  while (at) {
    const int pos = std::countr_zero(at);
    at &= at - 1;
    out |= ((packed >> j) & 1u) << pos;
    ++j;
  }
  return out;
}

int UrsellCache::pair_bit(int i, int j, int p) {
  // pairs (i,j), i<j, in lexicographic order
  return i * (2 * p - i - 1) / 2 + (j - i - 1);
}

long long UrsellCache::coefficient(std::span<const ImageSet> supports) {
  const int p = static_cast<int>(supports.size());
  if (p < 1) throw std::domain_error("Ursell coefficient needs p >= 1");
  if (p > kMaxP)
    throw CapError("Ursell coefficient refused for p = " + std::to_string(p) +
                   " (max " + std::to_string(kMaxP) + ")");
  std::uint32_t pattern = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (supports[static_cast<size_t>(i)].intersects(supports[static_cast<size_t>(j)]))
        pattern |= 1u << pair_bit(i, j, p);
  return coefficient_pattern(p, pattern);
}

long long UrsellCache::coefficient_pattern(int p, std::uint32_t pattern) {
  if (p == 1) return 1;
  if (p > kMaxP)
    throw CapError("Ursell coefficient refused for p = " + std::to_string(p));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find({p, pattern});
    if (it != memo_.end()) return it->second;
  }

  // edges allowed by the overlap pattern
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (pattern & (1u << pair_bit(i, j, p))) edges.emplace_back(i, j);

  long long total = 0;
  const std::uint32_t nsub = 1u << edges.size();
  for (std::uint32_t sub = 0; sub < nsub; ++sub) {
    // spanning connectivity over all p vertices
    int parent[kMaxP];
    for (int i = 0; i < p; ++i) parent[i] = i;
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    int comps = p;
    for (size_t e = 0; e < edges.size(); ++e)
      if (sub & (1u << e)) {
        int a = find(edges[e].first), b = find(edges[e].second);
        if (a != b) {
          parent[std::max(a, b)] = std::min(a, b);
          --comps;
        }
      }
    if (comps == 1) total += (std::popcount(sub) & 1) ? -1 : +1;
  }

  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(std::make_pair(p, pattern), total);
  return total;
}

long long ursell(std::span<const ImageSet> supports, UrsellCache& cache) {
  return cache.coefficient(supports);
}

namespace {

double factorial(int p) {
  double f = 1.0;
  for (int i = 2; i <= p; ++i) f *= i;
  return f;
}

}  // namespace

ClusterSum::ClusterSum(const std::vector<Polymer>& polymers, int nblocks, int p_max,
                       UrsellCache& cache, ClusterFilter filter, int threads)
    : nblocks_(nblocks), term_counts_(static_cast<size_t>(std::max(p_max, 0)) + 1, 0) {
  if (p_max < 1 || p_max > UrsellCache::kMaxP)
    throw CapError("cluster order p_max must lie in [1," +
                   std::to_string(UrsellCache::kMaxP) + "]");

  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(polymers.size()); ++i)
    if (polymers[static_cast<size_t>(i)].support.size() <= filter.support_cap)
      keep.push_back(i);
  const int K = static_cast<int>(keep.size());
  if (K == 0) return;

  std::vector<SpinMask> masks(static_cast<size_t>(K));
  for (int i = 0; i < K; ++i)
    masks[static_cast<size_t>(i)] = polymers[static_cast<size_t>(keep[static_cast<size_t>(i)])].support.mask();

  struct Partial {
    std::map<SpinMask, std::vector<double>> groups;
    std::vector<long long> counts;
  };
  std::vector<Partial> parts(static_cast<size_t>(K));

  parallel_for_chunks(K, threads, [&](int first) {
    Partial& part = parts[static_cast<size_t>(first)];
    part.counts.assign(static_cast<size_t>(p_max) + 1, 0);

    std::vector<int> tuple;  // indices into `keep`
    std::uint32_t pattern = 0;
    std::vector<std::vector<double>> scratch(static_cast<size_t>(p_max) + 1);

    // depth-first over ordered tuples; the running product table over the
    // union-so-far is extended one polymer at a time
    auto rec = [&](auto&& self, const std::vector<double>& table, SpinMask u) -> void {
      const int p = static_cast<int>(tuple.size());
      const long long C = cache.coefficient_pattern(p, pattern);
      if (C != 0) {
        part.counts[static_cast<size_t>(p)] += 1;
        const double scale = static_cast<double>(C) / factorial(p);
        auto [it, fresh] = part.groups.try_emplace(u);
        if (fresh) it->second.assign(size_t{1} << std::popcount(u), 0.0);
        for (size_t i = 0; i < table.size(); ++i) it->second[i] += scale * table[i];
      }
      if (p == p_max) return;
      const std::uint32_t saved_pattern = pattern;
      for (int j = 0; j < K; ++j) {
        const SpinMask mj = masks[static_cast<size_t>(j)];
        const SpinMask u2 = u | mj;
        // pair-bit positions depend on the tuple length, so rebuild
        tuple.push_back(j);
        const int p2 = p + 1;
        std::uint32_t pat2 = 0;
        for (int a = 0; a < p2; ++a)
          for (int bzz = a + 1; bzz < p2; ++bzz)
            if (masks[static_cast<size_t>(tuple[static_cast<size_t>(a)])] &
                masks[static_cast<size_t>(tuple[static_cast<size_t>(bzz)])])
              pat2 |= 1u << UrsellCache::pair_bit(a, bzz, p2);
        pattern = pat2;

        const Polymer& pj = polymers[static_cast<size_t>(keep[static_cast<size_t>(j)])];
        std::vector<double>& t2 = scratch[static_cast<size_t>(p2)];
        t2.resize(size_t{1} << std::popcount(u2));
        for (SpinMask idx = 0; idx < t2.size(); ++idx) {
          const SpinMask sp = scatter_mask(idx, u2);
          t2[idx] = table[subbits_mask(sp, u)] * pj.table[subbits_mask(sp, mj)];
        }

        self(self, t2, u2);
        tuple.pop_back();
        pattern = saved_pattern;
      }
    };

    tuple.push_back(first);
    const Polymer& p0 = polymers[static_cast<size_t>(keep[static_cast<size_t>(first)])];
    rec(rec, p0.table, masks[static_cast<size_t>(first)]);
    tuple.pop_back();
  });

  // merge partials in first-index order
  for (auto& part : parts) {
    for (auto& [u, t] : part.groups) {
      auto [it, fresh] = groups_.try_emplace(u, std::move(t));
      if (!fresh)
        for (size_t i = 0; i < it->second.size(); ++i) it->second[i] += t[i];
    }
    for (size_t p = 0; p < part.counts.size(); ++p)
      term_counts_[p] += part.counts[p];
  }
}

double ClusterSum::eval(SpinMask sigma_prime) const {
  double acc = 0.0;
  for (const auto& [u, t] : groups_) acc += t[subbits_mask(sigma_prime, u)];
  return acc;
}

double ClusterSum::eval_touching(SpinMask target, SpinMask sigma_prime) const {
  double acc = 0.0;
  for (const auto& [u, t] : groups_)
    if (u & target) acc += t[subbits_mask(sigma_prime, u)];
  return acc;
}

SpinMask ClusterSum::support_union(SpinMask target) const {
  SpinMask acc = 0;
  for (const auto& [u, t] : groups_)
    if (u & target) acc |= u;
  return acc;
}

double log_w_expansion(const std::vector<Polymer>& polymers, SpinMask sigma_prime,
                       int p_max, UrsellCache& cache) {
  if (polymers.empty()) return 0.0;
  SpinMask all = 0;
  for (const auto& p : polymers) all |= p.support.mask();
  ClusterSum cs(polymers, std::popcount(all) == 0 ? 1 : 64 - std::countl_zero(all),
                p_max, cache);
  return cs.eval(sigma_prime);
}

ExpansionCouplings expansion_couplings(const std::vector<Polymer>& polymers, int nblocks,
                                       int p_max, UrsellCache& cache, int threads) {
  ClusterSum cs(polymers, nblocks, p_max, cache, {}, threads);
  ExpansionCouplings out;
  for (const auto& [u, t] : cs.by_support()) {
    std::vector<double> wht = t;
    walsh_hadamard(wht);
    const double scale = 1.0 / static_cast<double>(wht.size());
    for (SpinMask local = 0; local < wht.size(); ++local)
      out.coef[ImageSet::from_mask(scatter_mask(local, u))] += wht[local] * scale;
  }
  return out;
}

KpReport kp_check(const std::vector<Polymer>& polymers, double M, const Blocking& b) {
  if (M <= 1.0) throw std::domain_error("cluster weight base M must exceed 1");
  KpReport rep;
  rep.M = M;
  rep.log_m = std::log(M);
  rep.all_pass = true;
  std::vector<double> sums(static_cast<size_t>(b.nblocks()), 0.0);
  for (const auto& p : polymers) {
    const double w = p.sup_abs() * std::pow(M, p.support.size());
    for (auto y : p.support) sums[static_cast<size_t>(y)] += w;
  }
  for (BlockId y = 0; y < b.nblocks(); ++y) {
    const double s = sums[static_cast<size_t>(y)];
    const bool pass = s <= rep.log_m;
    rep.sites.push_back({y, s, pass});
    rep.all_pass = rep.all_pass && pass;
  }
  return rep;
}

double avoidance_ratio(const ClusterSum& cs, const ImageSet& Y, SpinMask sigma_prime) {
  if (Y.empty()) throw std::domain_error("avoidance region Y must be nonempty");
  return std::exp(-cs.eval_touching(Y.mask(), sigma_prime));
}

double avoidance_ratio(const std::vector<Polymer>& polymers, const ImageSet& Y,
                       SpinMask sigma_prime, int p_max, UrsellCache& cache) {
  if (Y.empty()) throw std::domain_error("avoidance region Y must be nonempty");
  SpinMask all = Y.mask();
  for (const auto& p : polymers) all |= p.support.mask();
  const int nb = all == 0 ? 1 : 64 - std::countl_zero(all);
  ClusterSum cs(polymers, nb, p_max, cache);
  return std::exp(-cs.eval_touching(Y.mask(), sigma_prime));
}

double truncated_f(const std::vector<Polymer>& polymers, const ImageSet& target,
                   int support_cap, int length_cap, SpinMask sigma_prime,
                   UrsellCache& cache) {
  if (support_cap < 1 || length_cap < 1)
    throw std::domain_error("truncation parameters must be positive");
  SpinMask all = target.mask();
  for (const auto& p : polymers) all |= p.support.mask();
  const int nb = all == 0 ? 1 : 64 - std::countl_zero(all);
  ClusterFilter filter;
  filter.support_cap = support_cap;
  ClusterSum cs(polymers, nb, std::min(length_cap, UrsellCache::kMaxP), cache, filter);
  return std::exp(-cs.eval_touching(target.mask(), sigma_prime));
}

JacobianExpansion expansion_jacobian(const System& sys, const ImageSet& Z,
                                     const SiteSet& W, const PolymerCaps& caps,
                                     int p_max, double M, double p_split,
                                     UrsellCache& cache) {
  JacobianExpansion out;
  out.split = p_split;
  out.apriori_bound =
      std::pow(M, W.size()) * std::pow(1.0 + std::log(M), W.size());

  const auto polymers = enumerate_polymers(sys, caps);
  const auto decorated = decorated_weights(sys, W, caps);
  ClusterSum cs(polymers, sys.blocking.nblocks(), p_max, cache);
  const SpinMask zmask = Z.mask();

  for (const auto& dec : decorated) {
    const SpinMask domain = dec.domain.mask();
    const SpinMask region = domain | cs.support_union(domain);
    if (zmask & ~region) continue;  // sigma'_Z averages the term to zero
    const int nbits = std::popcount(region);
    std::vector<double> table(size_t{1} << nbits);
    for (SpinMask local = 0; local < table.size(); ++local) {
      const SpinMask sp = scatter_mask(local, region);
      table[local] =
          dec.table[subbits_mask(sp, domain)] * std::exp(-cs.eval_touching(domain, sp));
    }
    walsh_hadamard(table);
    const double contrib =
        table[subbits_mask(zmask, region)] / static_cast<double>(table.size());
    out.value += contrib;
    if (dec.support.size() <= p_split * W.size())
      out.small_r_magnitude += std::abs(contrib);
    else
      out.large_r_magnitude += std::abs(contrib);
  }
  return out;
}

}  // namespace blockrg
