#include <CLI11.hpp>
#include <iostream>

#include "blockrg/runners.hpp"

int main(int argc, char** argv) {
  CLI::App app{"blockrg: block-spin RG transformations, cluster expansions and "
               "high-temperature bound checks on finite lattice windows"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  int p_max_override = -1, n_max_override = -1, q_cap_override = -1;

  app.add_option("--config", config_path, "experiment config file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (default: out_dir from config)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--p-max", p_max_override, "override cluster order cap");
  app.add_option("--n-max", n_max_override, "override hypergraph link cap");
  app.add_option("--q-cap", q_cap_override, "override polymer support cap");

  for (const char* name : {"validate-kernel", "exact", "expand", "kp-check",
                           "band-profile", "bounds", "linearize"})
    app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    blockrg::RunContext ctx;
    ctx.cfg = blockrg::load_config(config_path);
    if (p_max_override > 0) ctx.cfg.p_max = p_max_override;
    if (n_max_override > 0) ctx.cfg.caps.n_max = n_max_override;
    if (q_cap_override > 0) ctx.cfg.caps.q_cap = q_cap_override;
    ctx.out_dir = out_dir.empty() ? std::filesystem::path(ctx.cfg.out_dir)
                                  : std::filesystem::path(out_dir);
    ctx.threads = threads;
    const std::string sub = app.get_subcommands().front()->get_name();
    const int code = blockrg::run_subcommand(sub, ctx);
    if (code != 0) std::cerr << sub << ": reported failure (exit " << code << ")\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return blockrg::exit_code_for_current_exception();
  }
}
