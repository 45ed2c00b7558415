#include "blockrg/exact.hpp"

#include <cmath>
#include <string>

#include "blockrg/parallel.hpp"

namespace blockrg {

System::System(Blocking b, Kernel k, Interaction j)
    : blocking(std::move(b)), kernel(std::move(k)), interaction(std::move(j)) {
  if (kernel.block_size() != blocking.block_cardinality())
    throw ValidationError("kernel block size does not match the blocking");
  for (const auto& [X, v] : interaction.couplings())
    for (auto x : X)
      if (!blocking.site_in_window(x))
        throw std::domain_error("coupling support leaves the window");
}

RenormalizedInteraction::RenormalizedInteraction(int nblocks, std::vector<double> coef)
    : nblocks_(nblocks), coef_(std::move(coef)) {
  if (coef_.size() != (size_t{1} << nblocks_))
    throw std::invalid_argument("coefficient table size mismatch");
}

void JacobianTable::insert(const ImageSet& Z, const SiteSet& W, double v) {
  if (!std::isfinite(v))
    throw NumericError("non-finite jacobian entry");
  entries_[{Z, W}] = v;
}

void JacobianTable::note_support(const SiteSet& W) {
  auto it = std::lower_bound(supports_.begin(), supports_.end(), W);
  if (it == supports_.end() || *it != W) supports_.insert(it, W);
}

bool JacobianTable::covers(const SiteSet& W) const {
  return std::binary_search(supports_.begin(), supports_.end(), W);
}

std::optional<double> JacobianTable::find(const ImageSet& Z, const SiteSet& W) const {
  auto it = entries_.find({Z, W});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

struct CompiledSystem {
  int nsites, nblocks, s;
  CompiledInteraction couplings;
  std::vector<std::vector<int>> block_bits;  // per block: site bit positions

  explicit CompiledSystem(const System& sys)
      : nsites(sys.blocking.nsites()),
        nblocks(sys.blocking.nblocks()),
        s(sys.blocking.block_cardinality()),
        couplings(compile(sys.interaction)) {
    block_bits.resize(static_cast<size_t>(nblocks));
    for (BlockId y = 0; y < nblocks; ++y) {
      auto sites = sys.blocking.block_sites(y);
      block_bits[static_cast<size_t>(y)].assign(sites.begin(), sites.end());
    }
  }

  std::uint32_t block_cfg(BlockId y, SpinMask sigma) const {
    std::uint32_t cfg = 0;
    const auto& bits = block_bits[static_cast<size_t>(y)];
    for (size_t i = 0; i < bits.size(); ++i)
      cfg |= static_cast<std::uint32_t>((sigma >> bits[i]) & 1u) << i;
    return cfg;
  }
};

void check_site_cap(const System& sys, const ExactOptions& opt) {
  if (sys.blocking.nsites() > opt.site_cap)
    throw CapError("window of " + std::to_string(sys.blocking.nsites()) +
                   " sites exceeds the brute-force cap " + std::to_string(opt.site_cap));
}

void check_table_caps(const System& sys, const ExactOptions& opt) {
  check_site_cap(sys, opt);
  if (sys.blocking.nblocks() > opt.image_cap)
    throw CapError("image window of " + std::to_string(sys.blocking.nblocks()) +
                   " blocks exceeds the full-table cap " + std::to_string(opt.image_cap));
  if (sys.blocking.nsites() + sys.blocking.nblocks() > opt.work_cap)
    throw CapError("window plus image window exceed the combined work cap " +
                   std::to_string(opt.work_cap));
}

/// Constrained averages for every sigma': avg of the Boltzmann-kernel weight,
/// optionally with a sigma_W insertion. Each table entry is a fixed
/// sequential sum over sigma, so results do not depend on the worker count.
void constrained_tables(const System& sys, const ExactOptions& opt,
                        const SpinMask* w_mask, std::vector<double>& w_out,
                        std::vector<double>* num_out) {
  const CompiledSystem cs(sys);
  const std::uint64_t nsigma = std::uint64_t{1} << cs.nsites;
  const std::uint64_t nprime = std::uint64_t{1} << cs.nblocks;
  const double scale = 1.0 / static_cast<double>(nsigma);

  w_out.assign(nprime, 0.0);
  if (num_out) num_out->assign(nprime, 0.0);

  std::vector<std::uint64_t> bounds;
  const int nchunks = fixed_chunks(nprime, 64, bounds);
  parallel_for_chunks(nchunks, opt.threads, [&](int chunk) {
    for (std::uint64_t sp = bounds[static_cast<size_t>(chunk)];
         sp < bounds[static_cast<size_t>(chunk) + 1]; ++sp) {
      double acc = 0.0, acc_num = 0.0;
      for (std::uint64_t sigma = 0; sigma < nsigma; ++sigma) {
        double w = std::exp(cs.couplings.eval(sigma));
        for (BlockId y = 0; y < cs.nblocks; ++y) {
          w *= sys.kernel.value(cs.block_cfg(y, sigma),
                                static_cast<int>((sp >> y) & 1u));
          if (w == 0.0) break;
        }
        acc += w;
        if (num_out) acc_num += w * parity_sign(sigma & *w_mask);
      }
      w_out[sp] = acc * scale;
      if (num_out) (*num_out)[sp] = acc_num * scale;
    }
  });
}

}  // namespace

double frozen_partition(const System& sys, SpinMask sigma_prime, const ExactOptions& opt) {
  check_site_cap(sys, opt);
  const CompiledSystem cs(sys);
  if (sigma_prime >> cs.nblocks)
    throw std::domain_error("sigma' has bits outside the image window");
  const std::uint64_t nsigma = std::uint64_t{1} << cs.nsites;

  std::vector<std::uint64_t> bounds;
  const int nchunks = fixed_chunks(nsigma, 64, bounds);
  std::vector<double> partial(static_cast<size_t>(nchunks), 0.0);
  parallel_for_chunks(nchunks, opt.threads, [&](int chunk) {
    double acc = 0.0;
    for (std::uint64_t sigma = bounds[static_cast<size_t>(chunk)];
         sigma < bounds[static_cast<size_t>(chunk) + 1]; ++sigma) {
      double w = std::exp(cs.couplings.eval(sigma));
      for (BlockId y = 0; y < cs.nblocks; ++y) {
        w *= sys.kernel.value(cs.block_cfg(y, sigma),
                              static_cast<int>((sigma_prime >> y) & 1u));
        if (w == 0.0) break;
      }
      acc += w;
    }
    partial[static_cast<size_t>(chunk)] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  total /= static_cast<double>(nsigma);
  if (total <= 0.0)
    throw NumericError("W(sigma') <= 0 at sigma' mask " + std::to_string(sigma_prime));
  return total;
}

std::vector<double> frozen_partition_table(const System& sys, const ExactOptions& opt) {
  check_table_caps(sys, opt);
  std::vector<double> w;
  constrained_tables(sys, opt, nullptr, w, nullptr);
  return w;
}

void walsh_hadamard(std::vector<double>& v) {
  const size_t n = v.size();
  for (size_t h = 1; h < n; h <<= 1)
    for (size_t i = 0; i < n; i += h << 1)
      for (size_t j = i; j < i + h; ++j) {
        const double a = v[j], b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
}

RenormalizedInteraction renormalized_couplings(const System& sys, const ExactOptions& opt) {
  auto w = frozen_partition_table(sys, opt);
  std::vector<double> logw(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0)
      throw NumericError("W(sigma') <= 0 at sigma' mask " + std::to_string(i));
    logw[i] = std::log(w[i]);
  }
  walsh_hadamard(logw);
  const double scale = 1.0 / static_cast<double>(w.size());
  for (auto& c : logw) c *= scale;
  return RenormalizedInteraction(sys.blocking.nblocks(), std::move(logw));
}

std::vector<double> jacobian_row(const System& sys, const SiteSet& W, const ExactOptions& opt) {
  check_table_caps(sys, opt);
  if (W.empty()) throw std::domain_error("jacobian support W must be nonempty");
  for (auto x : W)
    if (!sys.blocking.site_in_window(x)) throw std::domain_error("W leaves the window");
  const SpinMask wm = W.mask();
  std::vector<double> w, num;
  constrained_tables(sys, opt, &wm, w, &num);
  for (size_t sp = 0; sp < w.size(); ++sp) {
    if (w[sp] == 0.0)
      throw NumericError("division by W(sigma') = 0 at sigma' mask " + std::to_string(sp));
    num[sp] /= w[sp];
  }
  walsh_hadamard(num);
  const double scale = 1.0 / static_cast<double>(num.size());
  for (auto& c : num) c *= scale;
  return num;
}

double jacobian_exact(const System& sys, const ImageSet& Z, const SiteSet& W,
                      const ExactOptions& opt) {
  return jacobian_row(sys, W, opt)[Z.mask()];
}

double jacobian_fd(const System& sys, const ImageSet& Z, const SiteSet& W, double step,
                   const ExactOptions& opt) {
  if (step <= 0.0) throw std::domain_error("finite-difference step must be positive");
  auto perturbed = [&](double h) {
    Interaction j = sys.interaction;
    j.add(W, h);
    return renormalized_couplings(System(sys.blocking, sys.kernel, std::move(j)), opt).at(Z);
  };
  return (perturbed(step) - perturbed(-step)) / (2.0 * step);
}

JacobianTable jacobian_table(const System& sys, std::span<const SiteSet> ws,
                             int z_max_body, const ExactOptions& opt) {
  JacobianTable out;
  const int nb = sys.blocking.nblocks();
  for (const auto& W : ws) {
    auto row = jacobian_row(sys, W, opt);
    out.note_support(W);
    for (SpinMask z = 0; z < row.size(); ++z) {
      if (std::popcount(z) > z_max_body) continue;
      out.insert(ImageSet::from_mask(z), W, row[z]);
    }
  }
  (void)nb;
  return out;
}

double apply_linearization(const JacobianTable& jac, const Direction& K, const ImageSet& Z) {
  double acc = 0.0;
  for (const auto& [W, v] : K.couplings()) {
    auto entry = jac.find(Z, W);
    if (!entry) {
      if (!jac.covers(W))
        throw ValidationError("jacobian table does not cover a direction support");
      throw ValidationError("jacobian table has no entry for the requested Z");
    }
    acc += *entry * v;
  }
  return acc;
}

double inversion_residual(const RenormalizedInteraction& jp, const std::vector<double>& w_table) {
  std::vector<double> recon = jp.coefficients();
  walsh_hadamard(recon);  // self-inverse up to the 2^n factor already applied
  double worst = 0.0;
  for (size_t sp = 0; sp < w_table.size(); ++sp)
    worst = std::max(worst, std::abs(recon[sp] - std::log(w_table[sp])));
  return worst;
}

}  // namespace blockrg
