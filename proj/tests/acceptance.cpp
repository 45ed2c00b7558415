// Acceptance suite: every criterion prints one pass/fail line with the
// measured margins; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blockrg/bounds.hpp"
#include "blockrg/cluster.hpp"
#include "blockrg/runners.hpp"

using namespace blockrg;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void criterion(int number, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    auto [p, d] = body();
    pass = p;
    detail = d;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[64];
  std::snprintf(buf, sizeof(buf), " (%.2fs)", secs);
  report(number, name, pass, detail + buf);
}

System chain_system(int nsites, double k) {
  Blocking b({nsites}, {2});
  Interaction j;
  for (int i = 0; i + 1 < nsites; ++i) j.add(SiteSet{i, i + 1}, k);
  return System(std::move(b), Kernel::decimation(2, 0), std::move(j));
}

// pairs plus triples, scaled to a prescribed norm
System mixed_system(int nsites, double target_norm) {
  Blocking b({nsites}, {2});
  Interaction raw;
  for (int i = 0; i + 1 < nsites; ++i) raw.add(SiteSet{i, i + 1}, 1.0);
  for (int i = 0; i + 2 < nsites; ++i) raw.add(SiteSet{i, i + 1, i + 2}, 0.25);
  const double scale = target_norm / norm_r(raw, 1.0);
  Interaction j;
  for (const auto& [X, v] : raw.couplings()) j.add(X, v * scale);
  return System(std::move(b), Kernel::decimation(2, 0), std::move(j));
}

std::vector<SiteSet> subsets_up_to_two(int n) {
  std::vector<SiteSet> out;
  for (int i = 0; i < n; ++i) out.push_back(SiteSet{i});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.push_back(SiteSet{i, j});
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  criterion(1, "kernel axioms hold exactly for decimation (s=2) and majority (s=3)", [] {
    double worst = 0.0;
    for (const Kernel& k : {Kernel::decimation(2, 0), Kernel::majority(3)}) {
      auto rep = validate(k, 0.0);
      if (!rep.pass) return std::make_pair(false, "axiom failure for " + k.kind());
      for (const auto& a : rep.axioms) worst = std::max(worst, a.worst_violation);
    }
    return std::make_pair(worst == 0.0, "worst violation " + fmt(worst));
  });

  criterion(2, "4-site chain: J'({y1,y2}) = (1/2) log cosh 2K, odd sets vanish", [] {
    double worst_even = 0.0, worst_odd = 0.0;
    for (double k : {0.05, 0.1, 0.2, 0.4}) {
      auto jp = renormalized_couplings(chain_system(4, k));
      worst_even = std::max(worst_even, std::abs(jp.at(ImageSet{0, 1}) -
                                                 0.5 * std::log(std::cosh(2 * k))));
      worst_odd = std::max({worst_odd, std::abs(jp.at(ImageSet{0})),
                            std::abs(jp.at(ImageSet{1}))});
    }
    return std::make_pair(worst_even <= 1e-10 && worst_odd <= 1e-12,
                          "closed-form gap " + fmt(worst_even) + ", odd residual " +
                              fmt(worst_odd));
  });

  criterion(3, "8-site chain at K=0.1: exact jacobian vs central differences (1e-6)", [] {
    System sys = chain_system(8, 0.1);
    const double step = 1e-4;
    double worst = 0.0;
    for (const auto& w : subsets_up_to_two(8)) {
      auto row = jacobian_row(sys, w);
      Interaction jp = sys.interaction, jm = sys.interaction;
      jp.add(w, step);
      jm.add(w, -step);
      auto plus = renormalized_couplings(System(sys.blocking, sys.kernel, jp));
      auto minus = renormalized_couplings(System(sys.blocking, sys.kernel, jm));
      for (SpinMask z = 0; z < row.size(); ++z) {
        if (std::popcount(z) > 2) continue;
        const double fd = (plus.at_mask(z) - minus.at_mask(z)) / (2 * step);
        worst = std::max(worst, std::abs(fd - row[z]));
      }
    }
    return std::make_pair(worst <= 1e-6, "worst |exact - fd| " + fmt(worst));
  });

  criterion(4, "cluster expansion converges: residual <= 1e-6 at p_max=4, decreasing", [] {
    System sys = chain_system(8, 0.1);
    PolymerCaps caps;
    caps.n_max = 7;
    caps.q_cap = 4;
    auto ps = enumerate_polymers(sys, caps);
    auto wt = frozen_partition_table(sys);
    UrsellCache cache;
    double prev = 1e100, final_res = 0.0;
    bool decreasing = true;
    for (int pmax = 1; pmax <= 4; ++pmax) {
      ClusterSum cs(ps, sys.blocking.nblocks(), pmax, cache);
      double worst = 0.0;
      for (SpinMask sp = 0; sp < wt.size(); ++sp)
        worst = std::max(worst, std::abs(cs.eval(sp) - std::log(wt[sp])));
      decreasing = decreasing && worst < prev;
      prev = worst;
      final_res = worst;
    }
    return std::make_pair(final_res <= 1e-6 && decreasing,
                          "residual at p_max=4 " + fmt(final_res) +
                              (decreasing ? ", strictly decreasing" : ", NOT decreasing"));
  });

  criterion(5, "polymer partition identity reproduces W within 1e-10", [] {
    System sys = chain_system(4, 0.2);
    PolymerCaps caps;
    caps.n_max = 3;  // saturated: the instance has 3 links
    caps.q_cap = 2;
    auto ps = enumerate_polymers(sys, caps);
    auto wt = frozen_partition_table(sys);
    std::function<double(size_t, SpinMask, SpinMask)> rec =
        [&](size_t i, SpinMask used, SpinMask sp) -> double {
      if (i == ps.size()) return 1.0;
      double v = rec(i + 1, used, sp);
      const SpinMask m = ps[i].support.mask();
      if ((m & used) == 0) v += ps[i].at(sp) * rec(i + 1, used | m, sp);
      return v;
    };
    double worst = 0.0;
    for (SpinMask sp = 0; sp < wt.size(); ++sp)
      worst = std::max(worst, std::abs(rec(0, 0, sp) - wt[sp]));
    return std::make_pair(worst <= 1e-10, "worst identity gap " + fmt(worst));
  });

  criterion(6, "Ursell coefficients agree exactly with graph enumeration", [] {
    UrsellCache cache;
    ImageSet a{0}, b{0, 1}, d{2};
    bool ok = ursell(std::vector<ImageSet>{a}, cache) == 1;
    ok = ok && ursell(std::vector<ImageSet>{a, b}, cache) == -1;
    ok = ok && ursell(std::vector<ImageSet>{a, d}, cache) == 0;
    ok = ok && ursell(std::vector<ImageSet>{b, b, b}, cache) == 2;
    for (int p = 1; p <= 6; ++p) {
      std::vector<ImageSet> reps(static_cast<size_t>(p), b);
      long long expect = (p % 2 == 1) ? 1 : -1;
      for (int i = 1; i < p; ++i) expect *= i;
      ok = ok && ursell(reps, cache) == expect;
    }
    return std::make_pair(ok, std::string("integer agreement"));
  });

  criterion(7, "bound domination at (M=2, r=1, s=2) below the threshold", [] {
    const auto ctx0 = BoundsContext::make(1.0, 2.0, 2, 0.0, 2, 1.0);
    const double thr = threshold(ctx0);
    if (std::abs(thr - 0.0055471) > 1e-6)
      return std::make_pair(false, "threshold " + fmt(thr) + " off its frozen value");

    UrsellCache cache;
    std::string notes = "threshold " + fmt(thr);
    const double k = 0.9 * thr / (2.0 * std::exp(2.0));
    for (const System& sys : {chain_system(8, k), mixed_system(8, 0.9 * thr)}) {
      const auto ctx = derive_context(sys, 1.0, 2.0);
      if (ctx.norm_j > thr) return std::make_pair(false, std::string("instance above threshold"));

      PolymerCaps caps;
      caps.n_max = 6;
      caps.q_cap = 4;
      // (a) enumerated rooted contributions below abar
      auto abar = a_bar_table(ctx, caps.n_max);
      auto rooted = rooted_contributions(sys, 2.0, caps);
      for (const auto& row : rooted)
        for (int n = 1; n <= caps.n_max; ++n)
          if (row[static_cast<size_t>(n)] >
              abar[static_cast<size_t>(n - 1)].recursion * (1.0 + 1e-12))
            return std::make_pair(false, std::string("a_n(y) exceeds abar_n"));

      // (b) per-site polymer condition
      auto ps = enumerate_polymers(sys, caps);
      auto kp = kp_check(ps, 2.0, sys.blocking);
      if (!kp.all_pass) return std::make_pair(false, std::string("KP sufficient condition fails"));

      // (c) avoidance ratios within M^|Y|
      ClusterSum cs(ps, sys.blocking.nblocks(), 4, cache);
      for (SpinMask ym = 1; ym < 16; ++ym) {
        const ImageSet y = ImageSet::from_mask(ym);
        if (y.size() > 2) continue;
        for (SpinMask sp = 0; sp < 16; ++sp)
          if (std::abs(avoidance_ratio(cs, y, sp)) > std::pow(2.0, y.size()) + 1e-9)
            return std::make_pair(false, std::string("avoidance ratio above M^|Y|"));
      }

      // (d) jacobian entries within the a-priori bound
      for (const auto& w : subsets_up_to_two(sys.blocking.nsites())) {
        const double bound =
            std::pow(2.0, w.size()) * std::pow(1.0 + std::log(2.0), w.size());
        auto row = jacobian_row(sys, w);
        for (double v : row)
          if (std::abs(v) > bound)
            return std::make_pair(false, std::string("jacobian above the a-priori bound"));
      }
    }
    return std::make_pair(true, notes + ", both instances dominated");
  });

  criterion(8, "approximate band property on the 8-site chain", [] {
    const auto ctx0 = BoundsContext::make(1.0, 2.0, 2, 0.0, 2, 1.0);
    const double k = 0.9 * threshold(ctx0) / (2.0 * std::exp(2.0));
    System sys = chain_system(8, k);
    const auto ctx = derive_context(sys, 1.0, 2.0);

    std::map<int, double> envelope;
    std::vector<ImageSet> zs;
    for (SpinMask zm = 1; zm < 16; ++zm)
      if (std::popcount(zm) <= 2) zs.push_back(ImageSet::from_mask(zm));
    for (const auto& w : subsets_up_to_two(8)) {
      auto row = jacobian_row(sys, w);
      for (const auto& z : zs) {
        const int l = static_cast<int>(image_distance(w, z, sys.blocking));
        envelope[l] = std::max(envelope[l], std::abs(row[z.mask()]));
      }
    }
    // decreasing envelope with entries clamped at the measurement floor
    const double floor_eps = 1e-13;
    double prev = 1e100;
    for (const auto& [l, v] : envelope) {
      const double c = std::max(v, floor_eps);
      if (c > prev * (1.0 + 1e-12))
        return std::make_pair(false, "envelope rises at distance " + std::to_string(l));
      prev = c;
    }
    // beyond the activation distance the fixed band bound dominates
    auto bb = band_bound(ctx, 2, 0.75, 0.75, 0.75);
    bool checked = false;
    for (const auto& [l, v] : envelope)
      if (l > bb.activation_distance) {
        checked = true;
        if (v > bb.value)
          return std::make_pair(false, "entry at distance " + std::to_string(l) +
                                           " above the band bound");
      }
    if (!checked) return std::make_pair(false, std::string("no entries beyond activation"));
    return std::make_pair(true,
                          "envelope " + fmt(envelope[0]) + " > " + fmt(envelope[1]) +
                              " > ... , activation " + fmt(bb.activation_distance));
  });

  criterion(9, "linearization is linear; the majorant series dominates", [] {
    System sys(Blocking({8}, {2}), Kernel::decimation(2, 0), Interaction{});
    std::vector<SiteSet> ws = subsets_up_to_two(8);
    auto jac = jacobian_table(sys, ws, 2);

    std::mt19937 rng(20250810);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    double worst_rel = 0.0;
    for (int iter = 0; iter < 20; ++iter) {
      Direction k1, k2, combo;
      const double a = val(rng), b = val(rng);
      for (int t = 0; t < 4; ++t) {
        const auto& w = ws[rng() % ws.size()];
        const double v = val(rng);
        k1.add(w, v);
        combo.add(w, a * v);
      }
      for (int t = 0; t < 4; ++t) {
        const auto& w = ws[rng() % ws.size()];
        const double v = val(rng);
        k2.add(w, v);
        combo.add(w, b * v);
      }
      for (SpinMask zm = 0; zm < 16; ++zm) {
        if (std::popcount(zm) > 2) continue;
        const ImageSet z = ImageSet::from_mask(zm);
        const double lhs = apply_linearization(jac, combo, z);
        const double rhs =
            a * apply_linearization(jac, k1, z) + b * apply_linearization(jac, k2, z);
        const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
        worst_rel = std::max(worst_rel, std::abs(lhs - rhs) / scale);
      }
    }
    if (worst_rel > 1e-14)
      return std::make_pair(false, "linearity residual " + fmt(worst_rel));

    const double majorant = linearization_majorant(0.25, 1);
    if (!std::isfinite(majorant) || majorant <= 0.0)
      return std::make_pair(false, std::string("majorant series failed"));
    Direction k;
    k.add(SiteSet{0}, 0.8);
    k.add(SiteSet{2, 3}, -0.6);
    double norm_inf = 0.8, measured = 0.0;
    for (SpinMask zm = 0; zm < 16; ++zm) {
      if (std::popcount(zm) > 2) continue;
      measured = std::max(measured,
                          std::abs(apply_linearization(jac, k, ImageSet::from_mask(zm))));
    }
    const double fitted = measured / (majorant * norm_inf);
    const bool dominated = measured <= fitted * majorant * norm_inf * (1.0 + 1e-12);
    return std::make_pair(std::isfinite(fitted) && dominated,
                          "linearity residual " + fmt(worst_rel) + ", majorant " +
                              fmt(majorant) + ", fitted constant " + fmt(fitted));
  });

  criterion(10, "CLI outputs are bit-identical for --threads 1 and --threads 8", [&] {
    if (cli.empty())
      return std::make_pair(false, std::string("CLI path not supplied as argv[1]"));
    const fs::path root = fs::temp_directory_path() / "blockrg_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "config.json";
    {
      std::ofstream out(cfg);
      out << R"({
  "window": [8],
  "blocks": [2],
  "kernel": {"type": "decimation", "offset": 0},
  "couplings": {"generators": [{"offsets": [[0],[1]], "value": 3e-4}]},
  "r": 1.0,
  "M": 2.0,
  "caps": {"n_max": 7, "q_cap": 4, "p_max": 4},
  "jacobian": {"w_max_body": 2, "z_max_body": 2},
  "band": {"P": 0.75, "Q": 0.75, "Kc": 0.75},
  "direction": [{"sites": [[0]], "value": 1.0}, {"sites": [[2],[3]], "value": -0.5}]
})";
    }
    const std::vector<std::string> subs{"validate-kernel", "exact",        "expand",
                                        "kp-check",        "band-profile", "bounds",
                                        "linearize"};
    for (const auto& sub : subs) {
      for (int threads : {1, 8}) {
        const fs::path out = root / (sub + "_t" + std::to_string(threads));
        std::ostringstream cmd;
        cmd << cli << " " << sub << " --config " << cfg << " --out " << out
            << " --threads " << threads << " > " << (root / "log.txt") << " 2>&1";
        const int rc = std::system(cmd.str().c_str());
        if (rc != 0)
          return std::make_pair(false, sub + " exited nonzero at --threads " +
                                           std::to_string(threads));
      }
      const fs::path d1 = root / (sub + "_t1"), d8 = root / (sub + "_t8");
      size_t n1 = 0;
      for (const auto& entry : fs::directory_iterator(d1)) {
        ++n1;
        const fs::path other = d8 / entry.path().filename();
        if (!fs::exists(other) ||
            slurp(entry.path()) != slurp(other))
          return std::make_pair(false, sub + ": " + entry.path().filename().string() +
                                           " differs between thread counts");
      }
      size_t n8 = std::distance(fs::directory_iterator(d8), fs::directory_iterator{});
      if (n1 == 0 || n1 != n8)
        return std::make_pair(false, sub + ": output file sets differ");
    }
    fs::remove_all(root);
    return std::make_pair(true, std::string("7 subcommands, all files identical"));
  });

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
