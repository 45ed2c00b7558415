#include "blockrg/runners.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace blockrg {

namespace {

using nlohmann::json;

void write_manifest(const RunContext& ctx, const std::string& subcommand) {
  json m;
  m["tool"] = "blockrg";
  m["version"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["config"] = ctx.cfg.echo;
  m["caps_used"] = {{"n_max", ctx.cfg.caps.n_max},
                    {"q_cap", ctx.cfg.caps.q_cap},
                    {"guard", ctx.cfg.caps.guard},
                    {"p_max", ctx.cfg.p_max},
                    {"site_cap", ctx.cfg.exact.site_cap},
                    {"image_cap", ctx.cfg.exact.image_cap},
                    {"w_max_body", ctx.cfg.w_max_body},
                    {"z_max_body", ctx.cfg.z_max_body}};
  std::ofstream out(ctx.out_dir / (subcommand + "_manifest.json"), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest");
  out << m.dump(2) << "\n";
}

void prepare(RunContext& ctx) {
  std::filesystem::create_directories(ctx.out_dir);
  ctx.cfg.exact.threads = ctx.threads;
}

ExactOptions exact_opts(const RunContext& ctx) { return ctx.cfg.exact; }

std::vector<ImageSet> sorted_masks(int nblocks) {
  std::vector<ImageSet> zs;
  for (SpinMask m = 0; m < (SpinMask{1} << nblocks); ++m) zs.push_back(ImageSet::from_mask(m));
  std::sort(zs.begin(), zs.end(), [](const ImageSet& a, const ImageSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return zs;
}

void subsets_up_to(int n, int k, std::vector<std::vector<std::int32_t>>& out) {
  std::vector<std::int32_t> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (!cur.empty()) out.push_back(cur);
    if (static_cast<int>(cur.size()) == k) return;
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

Direction direction_from(const ExperimentConfig& cfg, const Blocking& b) {
  Direction k;
  for (const auto& [sites, value] : cfg.direction) {
    std::vector<std::int32_t> ids;
    for (const auto& c : sites) {
      SiteId id = b.site_id(c);
      if (id < 0) throw std::domain_error("direction support leaves the window");
      ids.push_back(id);
    }
    k.add(SiteSet(std::move(ids)), value);
  }
  return k;
}

}  // namespace

BoundsContext derive_context(const System& sys, double r, double M) {
  const double S = sys.interaction.range(sys.blocking);
  const int D = static_cast<int>(
      finite_body_constant(static_cast<int>(std::lround(S)), sys.blocking.dim()));
  return BoundsContext::make(r, M, sys.blocking.block_cardinality(),
                             norm_r(sys.interaction, r), D, S);
}

std::vector<SiteSet> jacobian_supports(const System& sys, const std::string& from,
                                       int w_max_body) {
  std::vector<SiteSet> ws;
  if (from == "couplings") {
    for (const auto& [X, v] : sys.interaction.couplings()) ws.push_back(X);
    return ws;
  }
  std::vector<std::vector<std::int32_t>> subsets;
  subsets_up_to(sys.blocking.nsites(), w_max_body, subsets);
  ws.reserve(subsets.size());
  for (auto& s : subsets) ws.emplace_back(std::move(s));
  std::sort(ws.begin(), ws.end(), [](const SiteSet& a, const SiteSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return ws;
}

std::vector<ImageSet> image_subsets(const Blocking& b, int z_max_body, bool include_empty) {
  std::vector<std::vector<std::int32_t>> subsets;
  subsets_up_to(b.nblocks(), z_max_body, subsets);
  std::vector<ImageSet> zs;
  if (include_empty) zs.emplace_back();
  for (auto& s : subsets) zs.emplace_back(std::move(s));
  std::sort(zs.begin(), zs.end(), [](const ImageSet& a, const ImageSet& z) {
    if (a.size() != z.size()) return a.size() < z.size();
    return a < z;
  });
  return zs;
}

int run_validate_kernel(RunContext& ctx) {
  prepare(ctx);
  Kernel k = ctx.cfg.make_kernel();
  KernelReport rep = validate(k);
  TableWriter t({"axiom", "pass", "worst_violation", "worst_configuration"});
  t.preamble("kernel", k.kind());
  t.preamble("block_cardinality", std::to_string(k.block_size()));
  t.preamble("overall", rep.pass ? "pass" : "fail");
  for (const auto& a : rep.axioms)
    t.row({a.axiom, a.pass ? "pass" : "fail", format_double(a.worst_violation),
           encode_spins(a.worst_cfg, k.block_size())});
  t.write(ctx.out_dir / "kernel_report.tsv");
  write_manifest(ctx, "validate-kernel");
  return rep.pass ? 0 : 2;
}

int run_exact(RunContext& ctx) {
  prepare(ctx);
  System sys = ctx.cfg.make_system();
  require_valid(sys.kernel);
  const auto opt = exact_opts(ctx);
  const int nb = sys.blocking.nblocks();

  auto w = frozen_partition_table(sys, opt);
  auto jp = renormalized_couplings(sys, opt);

  std::vector<double> recon = jp.coefficients();
  walsh_hadamard(recon);
  TableWriter wt({"sigma_prime", "W", "log_W", "inversion_residual"});
  for (SpinMask sp = 0; sp < w.size(); ++sp) {
    const double lw = std::log(w[sp]);
    wt.row({encode_spins(sp, nb), format_double(w[sp]), format_double(lw),
            format_double(std::abs(recon[sp] - lw))});
  }
  if (ctx.cfg.wants("wtable")) wt.write(ctx.out_dir / "wtable.tsv");

  TableWriter jt({"Z", "Jprime"});
  for (const auto& Z : sorted_masks(nb))
    jt.row({encode_image_set(Z, sys.blocking), format_double(jp.at(Z))});
  if (ctx.cfg.wants("jprime")) jt.write(ctx.out_dir / "jprime.tsv");

  const auto ws = jacobian_supports(sys, ctx.cfg.w_from, ctx.cfg.w_max_body);
  const auto zs = image_subsets(sys.blocking, ctx.cfg.z_max_body);
  TableWriter dt({"Z", "W", "dJprime_dJ"});
  for (const auto& W : ws) {
    auto row = jacobian_row(sys, W, opt);
    for (const auto& Z : zs)
      dt.row({encode_image_set(Z, sys.blocking), encode_site_set(W, sys.blocking),
              format_double(row[Z.mask()])});
  }
  if (ctx.cfg.wants("jacobian")) dt.write(ctx.out_dir / "jacobian.tsv");

  write_manifest(ctx, "exact");
  return 0;
}

int run_expand(RunContext& ctx) {
  prepare(ctx);
  System sys = ctx.cfg.make_system();
  require_valid(sys.kernel);
  const int nb = sys.blocking.nblocks();
  auto polymers = enumerate_polymers(sys, ctx.cfg.caps, ctx.threads);

  TableWriter pt({"N", "sigma_prime_on_N", "weight", "hypergraphs"});
  for (const auto& p : polymers) {
    long long total = 0;
    for (auto hcount : p.link_hist) total += hcount;
    for (SpinMask i = 0; i < p.table.size(); ++i)
      pt.row({encode_image_set(p.support, sys.blocking),
              encode_spins(i, p.support.size()), format_double(p.table[i]),
              std::to_string(total)});
  }
  pt.write(ctx.out_dir / "polymers.tsv");

  bool have_exact = true;
  std::vector<double> exact_logw;
  try {
    auto w = frozen_partition_table(sys, exact_opts(ctx));
    exact_logw.resize(w.size());
    for (size_t i = 0; i < w.size(); ++i) exact_logw[i] = std::log(w[i]);
  } catch (const CapError&) {
    have_exact = false;
  }

  UrsellCache cache;
  TableWriter ot({"p_max", "terms", "max_abs_residual"});
  for (int p = 1; p <= ctx.cfg.p_max; ++p) {
    ClusterSum cs(polymers, nb, p, cache, {}, ctx.threads);
    long long terms = 0;
    for (long long c : cs.term_counts()) terms += c;
    std::string res = "-";
    if (have_exact) {
      double worst = 0.0;
      for (SpinMask sp = 0; sp < exact_logw.size(); ++sp)
        worst = std::max(worst, std::abs(cs.eval(sp) - exact_logw[sp]));
      res = format_double(worst);
    }
    ot.row({std::to_string(p), std::to_string(terms), res});
  }
  ot.write(ctx.out_dir / "expansion_orders.tsv");

  auto coupl = expansion_couplings(polymers, nb, ctx.cfg.p_max, cache, ctx.threads);
  RenormalizedInteraction jp = have_exact
                                   ? renormalized_couplings(sys, exact_opts(ctx))
                                   : RenormalizedInteraction(
                                         nb, std::vector<double>(size_t{1} << nb, 0.0));
  TableWriter et({"Z", "expansion", "exact", "abs_diff"});
  for (const auto& [Z, v] : coupl.coef) {
    if (have_exact) {
      const double ev = jp.at(Z);
      et.row({encode_image_set(Z, sys.blocking), format_double(v), format_double(ev),
              format_double(std::abs(v - ev))});
    } else {
      et.row({encode_image_set(Z, sys.blocking), format_double(v), "-", "-"});
    }
  }
  et.write(ctx.out_dir / "expansion_couplings.tsv");

  write_manifest(ctx, "expand");
  return 0;
}

int run_kp(RunContext& ctx) {
  prepare(ctx);
  System sys = ctx.cfg.make_system();
  require_valid(sys.kernel);
  auto polymers = enumerate_polymers(sys, ctx.cfg.caps, ctx.threads);
  auto rep = kp_check(polymers, ctx.cfg.M, sys.blocking);
  const auto bctx = derive_context(sys, ctx.cfg.r, ctx.cfg.M);
  const double thr = threshold(bctx);

  TableWriter t({"y", "sum", "log_M", "margin", "pass"});
  t.preamble("norm_r", format_double(bctx.norm_j));
  t.preamble("threshold", format_double(thr));
  t.preamble("threshold_pass", bctx.norm_j <= thr ? "yes" : "no");
  t.preamble("M", format_double(ctx.cfg.M));
  t.preamble("overall", rep.all_pass ? "pass" : "fail");
  for (const auto& site : rep.sites)
    t.row({encode_image_set(ImageSet{site.y}, sys.blocking), format_double(site.sum),
           format_double(rep.log_m), format_double(rep.log_m - site.sum),
           site.pass ? "pass" : "fail"});
  if (ctx.cfg.wants("kp_certificate")) t.write(ctx.out_dir / "kp_certificate.tsv");

  // seeded spot checks of the unreduced condition
  //   sum_{N' overlapping N} |w_{N'}| M^{|N'|} <= |N| log M
  // on sampled regions N, alongside the per-site certificate above
  if (ctx.cfg.wants("kp_general_spot")) {
    std::mt19937_64 rng(ctx.cfg.seed);
    const int nb = sys.blocking.nblocks();
    TableWriter g({"N", "sum", "allowance", "pass"});
    g.preamble("samples", "8");
    g.preamble("seed", std::to_string(ctx.cfg.seed));
    for (int draw = 0; draw < 8; ++draw) {
      SpinMask nmask = rng() & ((SpinMask{1} << nb) - 1);
      if (nmask == 0) nmask = 1;
      const ImageSet n = ImageSet::from_mask(nmask);
      double lhs = 0.0;
      for (const auto& p : polymers)
        if (p.support.mask() & nmask)
          lhs += p.sup_abs() * std::pow(ctx.cfg.M, p.support.size());
      const double allowance = n.size() * rep.log_m;
      g.row({encode_image_set(n, sys.blocking), format_double(lhs),
             format_double(allowance), lhs <= allowance ? "pass" : "fail"});
    }
    g.write(ctx.out_dir / "kp_general_spot.tsv");
  }
  write_manifest(ctx, "kp-check");
  return 0;
}

int run_band(RunContext& ctx) {
  prepare(ctx);
  System sys = ctx.cfg.make_system();
  require_valid(sys.kernel);
  const auto opt = exact_opts(ctx);
  const auto ws = jacobian_supports(sys, ctx.cfg.w_from, ctx.cfg.w_max_body);
  auto zs = image_subsets(sys.blocking, ctx.cfg.z_max_body, /*include_empty=*/false);

  std::map<int, double> envelope;
  std::map<int, long long> pairs;
  for (const auto& W : ws) {
    auto row = jacobian_row(sys, W, opt);
    for (const auto& Z : zs) {
      const int l = static_cast<int>(image_distance(W, Z, sys.blocking));
      auto [it, fresh] = envelope.try_emplace(l, 0.0);
      it->second = std::max(it->second, std::abs(row[Z.mask()]));
      pairs[l] += 1;
    }
  }

  const auto bctx = derive_context(sys, ctx.cfg.r, ctx.cfg.M);
  const bool rho_ok = bctx.rho() < 1.0;
  BandBound fixed{};
  if (rho_ok) fixed = band_bound(bctx, ctx.cfg.w_max_body, ctx.cfg.band_p,
                                 ctx.cfg.band_q, ctx.cfg.band_kc);
  const double apriori = std::pow(ctx.cfg.M, ctx.cfg.w_max_body) *
                         std::pow(1.0 + std::log(ctx.cfg.M), ctx.cfg.w_max_body);

  TableWriter t({"l", "pairs", "max_abs_dJdW", "band_bound", "beyond_activation",
                 "subexp_bound"});
  t.preamble("P", format_double(ctx.cfg.band_p));
  t.preamble("Q", format_double(ctx.cfg.band_q));
  t.preamble("Kc", format_double(ctx.cfg.band_kc));
  t.preamble("activation_distance",
             rho_ok ? format_double(fixed.activation_distance) : "-");
  t.preamble("apriori_bound", format_double(apriori));
  t.preamble("threshold_pass", rho_ok ? "yes" : "no");
  for (const auto& [l, mx] : envelope) {
    std::string sub = "-";
    if (rho_ok && l > 0 && bctx.S > 0.0) {
      const double P = std::pow(l / (2.0 * bctx.S), ctx.cfg.band_alpha) /
                       std::max(1, ctx.cfg.w_max_body);
      const double Q = std::pow(l / (2.0 * bctx.S), ctx.cfg.band_beta);
      if (P > 0.0 && Q > 0.0)
        sub = format_double(band_bound(bctx, ctx.cfg.w_max_body, P, Q, Q).value);
    }
    t.row({std::to_string(l), std::to_string(pairs[l]), format_double(mx),
           rho_ok ? format_double(fixed.value) : "-",
           rho_ok && l > fixed.activation_distance ? "yes" : "no", sub});
  }
  t.write(ctx.out_dir / "band_profile.tsv");
  write_manifest(ctx, "band-profile");
  return 0;
}

int run_bounds(RunContext& ctx) {
  prepare(ctx);
  System sys = ctx.cfg.make_system();
  const auto bctx = derive_context(sys, ctx.cfg.r, ctx.cfg.M);
  const double thr = threshold(bctx);
  const double rho = bctx.rho();
  const bool rho_ok = rho < 1.0;

  json rep;
  rep["context"] = {{"r", bctx.r},       {"M", bctx.M},           {"s", bctx.s},
                    {"norm_r", bctx.norm_j}, {"epsilon", bctx.epsilon}, {"c", bctx.c},
                    {"D", bctx.D},       {"S", bctx.S}};
  rep["threshold"] = thr;
  rep["threshold_pass"] = bctx.norm_j <= thr;
  rep["rho"] = rho;

  auto abar = a_bar_table(bctx, ctx.cfg.bounds_n_max);
  json ja = json::array();
  for (int n = 1; n <= ctx.cfg.bounds_n_max; ++n) {
    const auto& a = abar[static_cast<size_t>(n - 1)];
    json e = {{"n", n}, {"recursion", a.recursion}};
    if (a.closed_valid)
      e["closed"] = a.closed;
    else
      e["closed"] = nullptr;
    ja.push_back(e);
  }
  rep["abar"] = ja;
  rep["abar_closed_sum"] = rho_ok ? json(bctx.c * rho / (1.0 - rho)) : json(nullptr);

  json jg = json::array();
  const double radius = generating_radius(bctx);
  std::vector<double> zs{0.0};
  if (std::isfinite(radius)) {
    zs.push_back(radius / 2.0);
    zs.push_back(radius);
    if (1.0 < radius) zs.push_back(1.0);
  }
  for (double z : zs) {
    auto g = generating_check(bctx, z);
    jg.push_back({{"z", z}, {"w", g.w}, {"residual", g.residual}});
  }
  rep["generating"] = jg;

  if (rho_ok) {
    json je = json::array();
    for (double P : ctx.cfg.eps_p) je.push_back({{"P", P}, {"value", eps_tail(bctx, P)}});
    rep["eps_tail"] = je;
    auto bb = band_bound(bctx, ctx.cfg.w_max_body, ctx.cfg.band_p, ctx.cfg.band_q,
                         ctx.cfg.band_kc);
    rep["band"] = {{"P", ctx.cfg.band_p},
                   {"Q", ctx.cfg.band_q},
                   {"Kc", ctx.cfg.band_kc},
                   {"w_body", ctx.cfg.w_max_body},
                   {"value", bb.value},
                   {"activation_distance", bb.activation_distance}};
    if (bctx.S > 0.0) {
      auto prof = subexp_profile(bctx, ctx.cfg.w_max_body, ctx.cfg.band_alpha,
                                 ctx.cfg.band_beta, ctx.cfg.subexp_l);
      json rows = json::array();
      for (const auto& row : prof.rows)
        rows.push_back({{"l", row.l}, {"P", row.P}, {"Q", row.Q}, {"bound", row.bound},
                        {"activation", row.activation}});
      rep["subexp"] = {{"alpha", ctx.cfg.band_alpha},
                       {"beta", ctx.cfg.band_beta},
                       {"alpha_prime", prof.alpha_prime},
                       {"fitted_c", prof.fitted_c},
                       {"eventually_decreasing", prof.eventually_decreasing},
                       {"rows", rows}};
    } else {
      rep["subexp"] = nullptr;
    }
  } else {
    rep["eps_tail"] = nullptr;
    rep["band"] = nullptr;
    rep["subexp"] = nullptr;
  }

  if (!ctx.cfg.generators.empty()) {
    std::vector<int> central(static_cast<size_t>(sys.blocking.dim()));
    for (int i = 0; i < sys.blocking.dim(); ++i)
      central[static_cast<size_t>(i)] = sys.blocking.grid_extent()[static_cast<size_t>(i)] / 2;
    ImageSet Z{sys.blocking.block_id(central)};
    json jc = json::array();
    for (double E : ctx.cfg.count_e)
      jc.push_back({{"E", E},
                    {"Z", encode_image_set(Z, sys.blocking)},
                    {"n", count_supports(sys.blocking, Z, E, ctx.cfg.generators)}});
    rep["count_supports"] = jc;
  } else {
    rep["count_supports"] = nullptr;
  }

  rep["linearization_majorant"] = {{"alpha", ctx.cfg.lin_alpha},
                                   {"d", sys.blocking.dim()},
                                   {"value", linearization_majorant(
                                                 ctx.cfg.lin_alpha, sys.blocking.dim())}};

  std::ofstream out(ctx.out_dir / "bounds_report.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write bounds report");
  out << rep.dump(2) << "\n";
  write_manifest(ctx, "bounds");
  return 0;
}

int run_linearize(RunContext& ctx) {
  prepare(ctx);
  System sys = ctx.cfg.make_system();
  require_valid(sys.kernel);
  Direction K = direction_from(ctx.cfg, sys.blocking);
  if (K.empty()) throw ValidationError("linearize needs a nonempty direction");

  std::vector<SiteSet> ws;
  for (const auto& [W, v] : K.couplings()) ws.push_back(W);
  auto jac = jacobian_table(sys, ws, ctx.cfg.z_max_body, exact_opts(ctx));

  double norm_inf = 0.0;
  for (const auto& [W, v] : K.couplings()) norm_inf = std::max(norm_inf, std::abs(v));
  const double majorant =
      linearization_majorant(ctx.cfg.lin_alpha, sys.blocking.dim());

  const auto zs = image_subsets(sys.blocking, ctx.cfg.z_max_body);
  std::vector<double> values;
  double fitted = 0.0;
  for (const auto& Z : zs) {
    const double v = apply_linearization(jac, K, Z);
    values.push_back(v);
    if (norm_inf > 0.0) fitted = std::max(fitted, std::abs(v) / (majorant * norm_inf));
  }

  TableWriter t({"Z", "LJK", "abs", "bound"});
  t.preamble("direction_sup_norm", format_double(norm_inf));
  t.preamble("majorant", format_double(majorant));
  t.preamble("majorant_alpha", format_double(ctx.cfg.lin_alpha));
  t.preamble("fitted_constant", format_double(fitted));
  const double bound = fitted * majorant * norm_inf;
  for (size_t i = 0; i < zs.size(); ++i)
    t.row({encode_image_set(zs[i], sys.blocking), format_double(values[i]),
           format_double(std::abs(values[i])), format_double(bound)});
  t.write(ctx.out_dir / "linearize.tsv");
  write_manifest(ctx, "linearize");
  return 0;
}

int run_subcommand(const std::string& name, RunContext& ctx) {
  if (name == "validate-kernel") return run_validate_kernel(ctx);
  if (name == "exact") return run_exact(ctx);
  if (name == "expand") return run_expand(ctx);
  if (name == "kp-check") return run_kp(ctx);
  if (name == "band-profile") return run_band(ctx);
  if (name == "bounds") return run_bounds(ctx);
  if (name == "linearize") return run_linearize(ctx);
  throw ValidationError("unknown subcommand '" + name + "'");
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const CapError&) {
    return 3;
  } catch (const NumericError&) {
    return 4;
  } catch (const ValidationError&) {
    return 2;
  } catch (const std::domain_error&) {
    return 2;
  } catch (const std::invalid_argument&) {
    return 2;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace blockrg
