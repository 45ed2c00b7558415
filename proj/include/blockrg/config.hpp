#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockrg/exact.hpp"
#include "blockrg/polymer.hpp"

namespace blockrg {

/// One experiment: lattice geometry, kernel, couplings, expansion parameters
/// and per-subcommand knobs, parsed from a JSON config file.
struct ExperimentConfig {
  std::vector<int> window, blocks;
  bool periodic = false;

  std::string kernel_type = "decimation";  // decimation|majority|constant|custom
  int kernel_offset = 0;
  std::filesystem::path kernel_file;

  std::vector<Generator> generators;
  std::vector<std::pair<std::vector<std::vector<int>>, double>> explicit_couplings;

  double r = 1.0;
  double M = 2.0;
  double range_cap = -1.0;  // negative: derive S from the couplings

  PolymerCaps caps;
  int p_max = 4;
  ExactOptions exact;  // thread count filled in by the CLI

  // jacobian selection
  std::string w_from = "subsets";  // subsets|couplings
  int w_max_body = 2;
  int z_max_body = 2;
  double fd_step = 1e-4;

  // band profile
  double band_p = 1.0, band_q = 1.0, band_kc = 1.0;
  double band_alpha = 0.25, band_beta = 0.5;

  // bounds report
  int bounds_n_max = 12;
  std::vector<double> eps_p{0, 2, 4, 6, 8};
  std::vector<double> subexp_l{4, 8, 16, 32, 64, 128, 256, 512};
  std::vector<double> count_e{0, 1, 2, 3};
  double lin_alpha = 0.25;

  std::vector<std::pair<std::vector<std::vector<int>>, double>> direction;

  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // empty: write everything

  bool wants(const std::string& name) const;

  nlohmann::json echo;  // normalized config, echoed into the manifest

  Blocking make_blocking() const;
  Kernel make_kernel() const;
  Interaction make_interaction(const Blocking& b) const;
  System make_system() const;
};

ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace blockrg
