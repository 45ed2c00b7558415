#include "blockrg/interaction.hpp"

#include <cmath>
#include <unordered_map>

namespace blockrg {

void Interaction::add(const SiteSet& support, double value) {
  if (support.empty())
    throw std::domain_error("the empty support is not a valid coupling");
  auto it = terms_.find(support);
  if (it == terms_.end()) {
    if (std::abs(value) >= kMinCoupling) terms_.emplace(support, value);
    return;
  }
  it->second += value;
  if (std::abs(it->second) < kMinCoupling) terms_.erase(it);
}

double Interaction::value(const SiteSet& support) const {
  auto it = terms_.find(support);
  return it == terms_.end() ? 0.0 : it->second;
}

int Interaction::max_body() const {
  int m = 0;
  for (const auto& [X, v] : terms_) m = std::max(m, X.size());
  return m;
}

double Interaction::range(const Blocking& b) const {
  double m = 0.0;
  for (const auto& [X, v] : terms_) m = std::max(m, diameter(X, b));
  return m;
}

double norm_r(const Interaction& J, double r) {
  if (r <= 0.0) throw std::domain_error("norm parameter r must be positive");
  std::unordered_map<SiteId, double> per_site;
  for (const auto& [X, v] : J.couplings()) {
    const double w = std::abs(v) * std::exp(r * X.size());
    for (auto x : X) per_site[x] += w;
  }
  double best = 0.0;
  for (const auto& [x, acc] : per_site) best = std::max(best, acc);
  return best;
}

int spin_product(SpinMask sigma, const SiteSet& X) {
  return parity_sign(sigma & X.mask());
}

double exponent(const Interaction& J, SpinMask sigma) {
  double acc = 0.0;
  for (const auto& [X, v] : J.couplings()) acc += v * spin_product(sigma, X);
  return acc;
}

Interaction generate_translation_invariant(std::span<const Generator> shapes,
                                           const Blocking& b, bool periodic,
                                           double range_cap) {
  Interaction out;
  const int d = b.dim();
  const auto& ext = b.window_extent();
  for (const auto& g : shapes) {
    if (g.offsets.empty())
      throw ValidationError("generator must have at least one offset");
    for (const auto& o : g.offsets)
      if (static_cast<int>(o.size()) != d)
        throw ValidationError("generator offset dimension mismatch");
    if (range_cap >= 0.0) {
      int diam = 0;
      for (size_t i = 0; i < g.offsets.size(); ++i)
        for (size_t j = i + 1; j < g.offsets.size(); ++j)
          for (int k = 0; k < d; ++k)
            diam = std::max(diam, std::abs(g.offsets[i][static_cast<size_t>(k)] -
                                           g.offsets[j][static_cast<size_t>(k)]));
      if (diam > range_cap)
        throw ValidationError("generator diameter exceeds the configured range cap");
    }
    for (SiteId base = 0; base < b.nsites(); ++base) {
      auto bc = b.site_coords(base);
      std::vector<std::int32_t> sites;
      sites.reserve(g.offsets.size());
      bool inside = true;
      for (const auto& o : g.offsets) {
        std::vector<int> c(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k) {
          c[static_cast<size_t>(k)] = bc[static_cast<size_t>(k)] + o[static_cast<size_t>(k)];
          if (periodic) {
            int e = ext[static_cast<size_t>(k)];
            c[static_cast<size_t>(k)] = ((c[static_cast<size_t>(k)] % e) + e) % e;
          }
        }
        SiteId id = b.site_id(c);
        if (id < 0) {
          inside = false;
          break;
        }
        sites.push_back(id);
      }
      if (inside) out.add(SiteSet(std::move(sites)), g.value);
    }
  }
  return out;
}

long long finite_body_constant(int S, int d) {
  if (S < 0 || d < 1) throw std::domain_error("need S >= 0 and d >= 1");
  long long D = 1;
  for (int i = 0; i < d; ++i) {
    D *= S + 1;
    if (D > (1LL << 40)) throw CapError("finite-body constant overflow");
  }
  return D;
}

CompiledInteraction compile(const Interaction& J) {
  CompiledInteraction c;
  c.terms.reserve(J.couplings().size());
  for (const auto& [X, v] : J.couplings()) c.terms.emplace_back(X.mask(), v);
  return c;
}

}  // namespace blockrg
