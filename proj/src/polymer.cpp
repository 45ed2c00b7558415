#include "blockrg/polymer.hpp"

#include <bit>
#include <cmath>
#include <map>

#include "blockrg/parallel.hpp"

namespace blockrg {

double Polymer::sup_abs() const {
  double m = 0.0;
  for (double v : table) m = std::max(m, std::abs(v));
  return m;
}

namespace {

using LinkMask = std::uint64_t;

struct Links {
  std::vector<SiteSet> sites;
  std::vector<SpinMask> site_mask;
  std::vector<SpinMask> image_mask;  // over block ids
  std::vector<double> value;
  std::vector<int> body;
  std::vector<LinkMask> adj;  // links sharing a block, self excluded

  int size() const { return static_cast<int>(sites.size()); }
};

Links build_links(const System& sys) {
  if (sys.blocking.nsites() > 64 || sys.blocking.nblocks() > 64)
    throw CapError("polymer enumeration needs window and image window within 64 sites");
  Links L;
  for (const auto& [X, v] : sys.interaction.couplings()) {
    L.sites.push_back(X);
    L.site_mask.push_back(X.mask());
    L.image_mask.push_back(image_support(X, sys.blocking).mask());
    L.value.push_back(v);
    L.body.push_back(X.size());
  }
  if (L.size() > 64)
    throw CapError("polymer enumeration supports at most 64 distinct links, got " +
                   std::to_string(L.size()));
  L.adj.assign(static_cast<size_t>(L.size()), 0);
  for (int i = 0; i < L.size(); ++i)
    for (int j = i + 1; j < L.size(); ++j)
      if (L.image_mask[static_cast<size_t>(i)] & L.image_mask[static_cast<size_t>(j)]) {
        L.adj[static_cast<size_t>(i)] |= LinkMask{1} << j;
        L.adj[static_cast<size_t>(j)] |= LinkMask{1} << i;
      }
  return L;
}

/// Depth-first growth of block-connected link sets. Each set is emitted
/// exactly once: a vertex explored at one branch is banned for its later
/// siblings, and branches whose image support exceeds q_cap are cut (any
/// superset only grows the support).
template <class Visit>
void grow(const Links& L, const PolymerCaps& caps, long long& count, LinkMask set,
          SpinMask img, int size, LinkMask ext, LinkMask excl, LinkMask allowed,
          Visit&& visit) {
  if (size == caps.n_max) return;
  LinkMask frontier = ext;
  while (frontier) {
    const int v = std::countr_zero(frontier);
    const LinkMask vbit = LinkMask{1} << v;
    frontier &= ~vbit;
    const SpinMask img2 = img | L.image_mask[static_cast<size_t>(v)];
    if (std::popcount(img2) <= caps.q_cap) {
      if (++count > caps.guard)
        throw CapError("hypergraph guard exceeded after " + std::to_string(count - 1) +
                       " hypergraphs");
      const LinkMask set2 = set | vbit;
      visit(set2, img2, size + 1);
      const LinkMask ext2 =
          (frontier | (L.adj[static_cast<size_t>(v)] & allowed)) & ~set2 & ~excl;
      grow(L, caps, count, set2, img2, size + 1, ext2, excl, allowed, visit);
    }
    excl |= vbit;
  }
}

/// Emits every block-connected hypergraph within caps, grouped by least link.
template <class Visit>
void enumerate_connected(const Links& L, const PolymerCaps& caps, int root,
                         long long& count, Visit&& visit) {
  const SpinMask img0 = L.image_mask[static_cast<size_t>(root)];
  if (std::popcount(img0) > caps.q_cap) return;
  if (++count > caps.guard)
    throw CapError("hypergraph guard exceeded after " + std::to_string(count - 1) +
                   " hypergraphs");
  const LinkMask rbit = LinkMask{1} << root;
  visit(rbit, img0, 1);
  LinkMask above = root + 1 >= 64 ? 0 : ~((rbit << 1) - 1);
  grow(L, caps, count, rbit, img0, 1, L.adj[static_cast<size_t>(root)] & above, 0,
       above, visit);
}

struct BlockLayout {
  std::vector<BlockId> blocks;      // ascending
  std::vector<int> site_to_local;   // window site -> local bit, -1 outside
  int total_bits = 0;
  int s = 0;

  BlockLayout(const Blocking& b, SpinMask img) : s(b.block_cardinality()) {
    site_to_local.assign(static_cast<size_t>(b.nsites()), -1);
    SpinMask m = img;
    while (m) {
      const BlockId y = std::countr_zero(m);
      m &= m - 1;
      for (auto site : b.block_sites(y))
        site_to_local[static_cast<size_t>(site)] = total_bits++;
      blocks.push_back(y);
    }
  }

  SpinMask localize(SpinMask global_sites) const {
    SpinMask out = 0;
    while (global_sites) {
      const int site = std::countr_zero(global_sites);
      global_sites &= global_sites - 1;
      const int bit = site_to_local[static_cast<size_t>(site)];
      if (bit < 0) throw std::domain_error("link site outside the polymer's blocks");
      out |= SpinMask{1} << bit;
    }
    return out;
  }
};

/// Weight table over the 2^k local sigma' assignments (k = #blocks of the
/// layout) for one hypergraph, with an optional sigma_W insertion. Normalized
/// over the spins of the layout's blocks.
void accumulate_alpha_table(const System& sys, const BlockLayout& lay,
                            const std::vector<SpinMask>& link_local,
                            const std::vector<std::pair<double, double>>& link_expm1,
                            const SpinMask* insertion_local, std::vector<double>& out) {
  const int nb = static_cast<int>(lay.blocks.size());
  const int B = lay.total_bits;
  const std::uint64_t nsigma = std::uint64_t{1} << B;
  const double scale = 1.0 / static_cast<double>(nsigma);
  const std::uint32_t cfg_mask = (1u << lay.s) - 1u;
  std::vector<double> buf(size_t{1} << nb);

  for (std::uint64_t sigma = 0; sigma < nsigma; ++sigma) {
    double prod = 1.0;
    for (size_t i = 0; i < link_local.size(); ++i)
      prod *= (std::popcount(sigma & link_local[i]) & 1) ? link_expm1[i].second
                                                         : link_expm1[i].first;
    if (insertion_local) prod *= parity_sign(sigma & *insertion_local);
    buf[0] = prod;
    int extent = 1;
    for (int j = 0; j < nb; ++j) {
      const std::uint32_t cfg =
          static_cast<std::uint32_t>(sigma >> (j * lay.s)) & cfg_mask;
      const double t0 = sys.kernel.value(cfg, 0);
      const double t1 = sys.kernel.value(cfg, 1);
      for (int idx = extent - 1; idx >= 0; --idx) {
        const double b = buf[static_cast<size_t>(idx)];
        buf[static_cast<size_t>(idx) | (size_t{1} << j)] = b * t1;
        buf[static_cast<size_t>(idx)] = b * t0;
      }
      extent <<= 1;
    }
    for (size_t i = 0; i < out.size(); ++i) out[i] += buf[i] * scale;
  }
}

std::vector<double> hypergraph_table(const System& sys, const Links& L, LinkMask set,
                                     SpinMask img, const SiteSet* insertion) {
  BlockLayout lay(sys.blocking, img);
  std::vector<SpinMask> link_local;
  std::vector<std::pair<double, double>> link_expm1;
  LinkMask m = set;
  while (m) {
    const int v = std::countr_zero(m);
    m &= m - 1;
    link_local.push_back(lay.localize(L.site_mask[static_cast<size_t>(v)]));
    const double val = L.value[static_cast<size_t>(v)];
    link_expm1.emplace_back(std::expm1(val), std::expm1(-val));
  }
  std::vector<double> table(size_t{1} << lay.blocks.size(), 0.0);
  if (insertion) {
    const SpinMask ins = lay.localize(insertion->mask());
    accumulate_alpha_table(sys, lay, link_local, link_expm1, &ins, table);
  } else {
    accumulate_alpha_table(sys, lay, link_local, link_expm1, nullptr, table);
  }
  return table;
}

}  // namespace

double alpha(const System& sys, const ImageSet& N, const Hypergraph& gamma,
             SpinMask sigma_prime_on_N) {
  if (gamma.empty()) throw std::domain_error("alpha needs a nonempty hypergraph");
  if (block_components(gamma, sys.blocking).size() != 1)
    throw std::domain_error("alpha needs a block-connected hypergraph");
  SiteSet all;
  for (const auto& X : gamma.links()) all = all.unite(X);
  if (image_support(all, sys.blocking) != N)
    throw std::domain_error("hypergraph image support does not match N");

  BlockLayout lay(sys.blocking, N.mask());
  std::vector<SpinMask> link_local;
  std::vector<std::pair<double, double>> link_expm1;
  for (const auto& X : gamma.links()) {
    link_local.push_back(lay.localize(X.mask()));
    const double val = sys.interaction.value(X);
    link_expm1.emplace_back(std::expm1(val), std::expm1(-val));
  }
  std::vector<double> table(size_t{1} << N.size(), 0.0);
  accumulate_alpha_table(sys, lay, link_local, link_expm1, nullptr, table);
  return table[sigma_prime_on_N];
}

std::vector<Polymer> enumerate_polymers(const System& sys, const PolymerCaps& caps,
                                        int threads) {
  if (caps.n_max <= 0 || caps.q_cap <= 0 || caps.guard <= 0)
    throw std::domain_error("polymer caps must be positive");
  const Links L = build_links(sys);

  using Accum = std::map<ImageSet, Polymer>;
  std::vector<Accum> per_root(static_cast<size_t>(std::max(L.size(), 1)));
  std::vector<long long> counts(static_cast<size_t>(std::max(L.size(), 1)), 0);

  parallel_for_chunks(L.size(), threads, [&](int root) {
    auto& acc = per_root[static_cast<size_t>(root)];
    enumerate_connected(L, caps, root, counts[static_cast<size_t>(root)],
                        [&](LinkMask set, SpinMask img, int nlinks) {
                          auto table = hypergraph_table(sys, L, set, img, nullptr);
                          ImageSet N = ImageSet::from_mask(img);
                          auto [it, fresh] = acc.try_emplace(N);
                          Polymer& p = it->second;
                          if (fresh) {
                            p.support = N;
                            p.table.assign(table.size(), 0.0);
                            p.link_hist.assign(static_cast<size_t>(caps.n_max) + 1, 0);
                          }
                          for (size_t i = 0; i < table.size(); ++i) p.table[i] += table[i];
                          p.link_hist[static_cast<size_t>(nlinks)] += 1;
                        });
  });

  long long total = 0;
  for (long long c : counts) total += c;
  if (total > caps.guard)
    throw CapError("hypergraph guard exceeded: " + std::to_string(total));

  // keyed merge in root order keeps the accumulation order fixed
  Accum merged;
  for (auto& acc : per_root)
    for (auto& [N, p] : acc) {
      auto [it, fresh] = merged.try_emplace(N, std::move(p));
      if (!fresh) {
        for (size_t i = 0; i < it->second.table.size(); ++i)
          it->second.table[i] += p.table[i];
        for (size_t i = 0; i < it->second.link_hist.size(); ++i)
          it->second.link_hist[i] += p.link_hist[i];
      }
    }

  std::vector<Polymer> out;
  out.reserve(merged.size());
  for (auto& [N, p] : merged) out.push_back(std::move(p));
  return out;
}

std::vector<DecoratedPolymer> decorated_weights(const System& sys, const SiteSet& W,
                                                const PolymerCaps& caps) {
  if (W.empty()) throw std::domain_error("insertion set W must be nonempty");
  for (auto x : W)
    if (!sys.blocking.site_in_window(x)) throw std::domain_error("W leaves the window");
  const Links L = build_links(sys);
  const SpinMask wprime = image_support(W, sys.blocking).mask();

  std::map<ImageSet, DecoratedPolymer> acc;
  auto emit = [&](SpinMask r_img, LinkMask set, int nlinks) {
    const SpinMask domain = r_img | wprime;
    auto table = hypergraph_table(sys, L, set, domain, &W);
    ImageSet R = ImageSet::from_mask(r_img);
    auto [it, fresh] = acc.try_emplace(R);
    DecoratedPolymer& d = it->second;
    if (fresh) {
      d.support = R;
      d.insertion = W;
      d.domain = ImageSet::from_mask(domain);
      d.table.assign(table.size(), 0.0);
      d.link_hist.assign(static_cast<size_t>(caps.n_max) + 1, 0);
    }
    for (size_t i = 0; i < table.size(); ++i) d.table[i] += table[i];
    d.link_hist[static_cast<size_t>(nlinks)] += 1;
  };

  long long count = 0;
  emit(0, 0, 0);  // the empty hypergraph: R = empty
  LinkMask ext0 = 0;
  for (int i = 0; i < L.size(); ++i)
    if (L.image_mask[static_cast<size_t>(i)] & wprime) ext0 |= LinkMask{1} << i;
  const LinkMask all = L.size() >= 64 ? ~LinkMask{0}
                                      : (LinkMask{1} << L.size()) - 1;
  // q_cap applies to |R union W'|: start the growth from the insertion's image
  PolymerCaps caps_w = caps;
  grow(L, caps_w, count, 0, wprime, 0, ext0, 0, all,
       [&](LinkMask set, SpinMask img_with_w, int nlinks) {
         SpinMask r_img = 0;
         LinkMask m = set;
         while (m) {
           const int v = std::countr_zero(m);
           m &= m - 1;
           r_img |= L.image_mask[static_cast<size_t>(v)];
         }
         emit(r_img, set, nlinks);
         (void)img_with_w;
       });

  std::vector<DecoratedPolymer> out;
  out.reserve(acc.size());
  for (auto& [R, d] : acc) out.push_back(std::move(d));
  return out;
}

std::vector<std::vector<double>> rooted_contributions(const System& sys, double M,
                                                      const PolymerCaps& caps) {
  if (M <= 1.0) throw std::domain_error("cluster weight base M must exceed 1");
  const Links L = build_links(sys);
  std::vector<double> link_weight(static_cast<size_t>(L.size()));
  for (int i = 0; i < L.size(); ++i)
    link_weight[static_cast<size_t>(i)] =
        2.0 * std::abs(L.value[static_cast<size_t>(i)]) *
        std::pow(M, L.body[static_cast<size_t>(i)]);

  std::vector<std::vector<double>> a(
      static_cast<size_t>(sys.blocking.nblocks()),
      std::vector<double>(static_cast<size_t>(caps.n_max) + 1, 0.0));
  long long count = 0;
  for (int root = 0; root < L.size(); ++root) {
    enumerate_connected(L, caps, root, count, [&](LinkMask set, SpinMask img, int n) {
      double w = 1.0;
      LinkMask m = set;
      while (m) {
        const int v = std::countr_zero(m);
        m &= m - 1;
        w *= link_weight[static_cast<size_t>(v)];
      }
      SpinMask ys = img;
      while (ys) {
        const int y = std::countr_zero(ys);
        ys &= ys - 1;
        a[static_cast<size_t>(y)][static_cast<size_t>(n)] += w;
      }
    });
  }
  return a;
}

double rooted_contribution(const System& sys, BlockId y, int n, double M,
                           const PolymerCaps& caps) {
  if (n < 1 || n > caps.n_max) throw std::domain_error("link count n out of range");
  if (y < 0 || y >= sys.blocking.nblocks())
    throw std::domain_error("block id outside image window");
  return rooted_contributions(sys, M, caps)[static_cast<size_t>(y)][static_cast<size_t>(n)];
}

}  // namespace blockrg
