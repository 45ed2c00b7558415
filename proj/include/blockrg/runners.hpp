#pragma once

#include <filesystem>

#include "blockrg/bounds.hpp"
#include "blockrg/cluster.hpp"
#include "blockrg/config.hpp"
#include "blockrg/table_io.hpp"

namespace blockrg {

struct RunContext {
  ExperimentConfig cfg;
  std::filesystem::path out_dir;
  int threads = 1;
};

int run_validate_kernel(RunContext& ctx);
int run_exact(RunContext& ctx);
int run_expand(RunContext& ctx);
int run_kp(RunContext& ctx);
int run_band(RunContext& ctx);
int run_bounds(RunContext& ctx);
int run_linearize(RunContext& ctx);

/// Dispatch by subcommand name; returns the process exit code.
int run_subcommand(const std::string& name, RunContext& ctx);

/// Exit code for the in-flight exception: 2 validation, 3 cap refusal,
/// 4 numeric error.
int exit_code_for_current_exception();

/// Bounds context derived from a system: norm, block cardinality, and the
/// finite-range constants S (coupling range) and D = (S+1)^d.
BoundsContext derive_context(const System& sys, double r, double M);

/// Candidate differentiation supports: either every window subset with
/// 1 <= |W| <= w_max_body, or the interaction's own supports.
std::vector<SiteSet> jacobian_supports(const System& sys, const std::string& from,
                                       int w_max_body);

/// Image subsets with |Z| <= z_max_body, the empty set first, then by
/// (cardinality, lexicographic ids).
std::vector<ImageSet> image_subsets(const Blocking& b, int z_max_body,
                                    bool include_empty = true);

}  // namespace blockrg
