#include "blockrg/config.hpp"

#include <cmath>
#include <fstream>

namespace blockrg {

namespace {

using nlohmann::json;

std::vector<int> int_list(const json& j, const std::string& key) {
  std::vector<int> out;
  for (const auto& v : j.at(key)) out.push_back(v.get<int>());
  return out;
}

std::vector<std::vector<int>> offset_list(const json& j) {
  std::vector<std::vector<int>> out;
  for (const auto& row : j) {
    std::vector<int> o;
    for (const auto& v : row) o.push_back(v.get<int>());
    out.push_back(std::move(o));
  }
  return out;
}

auto coupling_list(const json& j) {
  std::vector<std::pair<std::vector<std::vector<int>>, double>> out;
  for (const auto& entry : j)
    out.emplace_back(offset_list(entry.at("sites")), entry.at("value").get<double>());
  return out;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    cfg.window = int_list(j, "window");
    cfg.blocks = int_list(j, "blocks");
    if (j.contains("dimension") &&
        j.at("dimension").get<size_t>() != cfg.window.size())
      throw ValidationError("dimension does not match the window extents");
    if (j.contains("boundary")) {
      const std::string b = j.at("boundary").get<std::string>();
      if (b != "free" && b != "periodic")
        throw ValidationError("boundary must be 'free' or 'periodic'");
      cfg.periodic = b == "periodic";
    }

    const auto& k = j.at("kernel");
    cfg.kernel_type = k.at("type").get<std::string>();
    if (cfg.kernel_type == "decimation") cfg.kernel_offset = k.value("offset", 0);
    if (cfg.kernel_type == "custom") {
      std::filesystem::path p = k.at("file").get<std::string>();
      cfg.kernel_file = p.is_absolute() ? p : base_dir / p;
    }

    if (j.contains("couplings")) {
      const auto& c = j.at("couplings");
      if (c.contains("generators"))
        for (const auto& g : c.at("generators"))
          cfg.generators.push_back(
              {offset_list(g.at("offsets")), g.at("value").get<double>()});
      if (c.contains("explicit")) cfg.explicit_couplings = coupling_list(c.at("explicit"));
    }

    cfg.r = j.value("r", 1.0);
    cfg.M = j.value("M", 2.0);
    cfg.range_cap = j.value("range_cap", -1.0);
    if (j.contains("caps")) {
      const auto& c = j.at("caps");
      cfg.caps.n_max = c.value("n_max", cfg.caps.n_max);
      cfg.caps.q_cap = c.value("q_cap", cfg.caps.q_cap);
      cfg.caps.guard = c.value("guard", cfg.caps.guard);
      cfg.p_max = c.value("p_max", cfg.p_max);
      cfg.exact.site_cap = c.value("site_cap", cfg.exact.site_cap);
      cfg.exact.image_cap = c.value("image_cap", cfg.exact.image_cap);
      cfg.exact.work_cap = c.value("work_cap", cfg.exact.work_cap);
    }
    if (j.contains("jacobian")) {
      const auto& c = j.at("jacobian");
      cfg.w_from = c.value("w_from", cfg.w_from);
      cfg.w_max_body = c.value("w_max_body", cfg.w_max_body);
      cfg.z_max_body = c.value("z_max_body", cfg.z_max_body);
      cfg.fd_step = c.value("fd_step", cfg.fd_step);
      if (cfg.w_from != "subsets" && cfg.w_from != "couplings")
        throw ValidationError("jacobian.w_from must be 'subsets' or 'couplings'");
    }
    if (j.contains("band")) {
      const auto& c = j.at("band");
      cfg.band_p = c.value("P", cfg.band_p);
      cfg.band_q = c.value("Q", cfg.band_q);
      cfg.band_kc = c.value("Kc", cfg.band_kc);
      cfg.band_alpha = c.value("alpha", cfg.band_alpha);
      cfg.band_beta = c.value("beta", cfg.band_beta);
    }
    if (j.contains("bounds")) {
      const auto& c = j.at("bounds");
      cfg.bounds_n_max = c.value("n_max", cfg.bounds_n_max);
      if (c.contains("eps_p")) cfg.eps_p = c.at("eps_p").get<std::vector<double>>();
      if (c.contains("subexp_l")) cfg.subexp_l = c.at("subexp_l").get<std::vector<double>>();
      if (c.contains("count_e")) cfg.count_e = c.at("count_e").get<std::vector<double>>();
      cfg.lin_alpha = c.value("lin_alpha", cfg.lin_alpha);
    }
    if (j.contains("direction")) cfg.direction = coupling_list(j.at("direction"));
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("outputs"))
      cfg.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config error: ") + e.what());
  }

  if (cfg.caps.n_max <= 0 || cfg.caps.q_cap <= 0 || cfg.caps.guard <= 0 ||
      cfg.p_max <= 0 || cfg.exact.site_cap <= 0 || cfg.exact.image_cap <= 0)
    throw ValidationError("all caps must be positive");
  if (!(cfg.M > 1.0 && cfg.M < std::exp(cfg.r)))
    throw ValidationError("M must lie in (1, e^r)");

  cfg.echo = j;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

bool ExperimentConfig::wants(const std::string& name) const {
  if (outputs.empty()) return true;
  for (const auto& o : outputs)
    if (o == name) return true;
  return false;
}

Blocking ExperimentConfig::make_blocking() const { return Blocking(window, blocks); }

Kernel ExperimentConfig::make_kernel() const {
  int s = 1;
  for (size_t i = 0; i < blocks.size(); ++i) s *= blocks[i];
  if (kernel_type == "decimation") return Kernel::decimation(s, kernel_offset);
  if (kernel_type == "majority") return Kernel::majority(s);
  if (kernel_type == "constant") return Kernel::constant(s);
  if (kernel_type == "custom") return Kernel::from_file(kernel_file, s);
  throw ValidationError("unknown kernel type '" + kernel_type + "'");
}

Interaction ExperimentConfig::make_interaction(const Blocking& b) const {
  Interaction j = generate_translation_invariant(generators, b, periodic, range_cap);
  for (const auto& [sites, value] : explicit_couplings) {
    std::vector<std::int32_t> ids;
    for (const auto& c : sites) {
      SiteId id = b.site_id(c);
      if (id < 0) throw std::domain_error("explicit coupling leaves the window");
      ids.push_back(id);
    }
    j.add(SiteSet(std::move(ids)), value);
  }
  return j;
}

System ExperimentConfig::make_system() const {
  Blocking b = make_blocking();
  Kernel k = make_kernel();
  Interaction j = make_interaction(b);
  return System(std::move(b), std::move(k), std::move(j));
}

}  // namespace blockrg
