#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "blockrg/runners.hpp"
#include "helpers.hpp"

using namespace blockrg;
using namespace blockrg::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json chain_config_json(int nsites, double k) {
  nlohmann::json j;
  j["window"] = {nsites};
  j["blocks"] = {2};
  j["kernel"] = {{"type", "decimation"}, {"offset", 0}};
  j["couplings"] = {
      {"generators", {{{"offsets", {{0}, {1}}}, {"value", k}}}}};
  j["r"] = 1.0;
  j["M"] = 2.0;
  j["caps"] = {{"n_max", 7}, {"q_cap", 4}, {"p_max", 4}};
  return j;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("blockrg_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// grab the value cell of the first row whose leading cells match
std::string table_lookup(const std::string& rendered, const std::string& key0,
                         int column) {
  std::istringstream in(rendered);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, '\t')) cells.push_back(cell);
    if (!cells.empty() && cells[0] == key0 && column < static_cast<int>(cells.size()))
      return cells[static_cast<size_t>(column)];
  }
  return "";
}

}  // namespace

TEST_CASE("set encodings round-trip and match the documented format") {
  Blocking b({4, 4}, {2, 2});
  SiteSet x{b.site_id(std::vector<int>{0, 1}), b.site_id(std::vector<int>{2, 3})};
  const std::string sx = encode_site_set(x, b);
  CHECK(sx == "(0,1);(2,3)");
  CHECK(decode_site_set(sx, b) == x);
  CHECK(encode_site_set(SiteSet{}, b) == "-");
  CHECK(decode_site_set("-", b).empty());

  ImageSet z{0, 3};
  const std::string sz = encode_image_set(z, b);
  CHECK(sz == "y0(0,0);y3(1,1)");
  CHECK(decode_image_set(sz, b) == z);
  CHECK_THROWS_AS(decode_image_set("y9(0,0)", b), ValidationError);
  CHECK_THROWS_AS(decode_site_set("(9,9)", b), ValidationError);

  CHECK(encode_spins(0b0110, 4) == "+--+");
}

TEST_CASE("tables carry verifiable checksums") {
  TableWriter t({"a", "b"});
  t.preamble("note", "x");
  t.row({"1", format_double(0.5)});
  t.row({"2", format_double(-1.25)});
  const std::string rendered = t.render();
  CHECK(table_checksum_ok(rendered));
  std::string corrupted = rendered;
  corrupted[corrupted.find("1\t")] = '7';
  CHECK_FALSE(table_checksum_ok(corrupted));
  CHECK_THROWS_AS(t.row({"only-one-cell"}), std::invalid_argument);
}

TEST_CASE("config parsing and validation") {
  auto cfg = parse_config(chain_config_json(8, 0.1), ".");
  CHECK(cfg.window == std::vector<int>{8});
  CHECK(cfg.caps.n_max == 7);
  CHECK(cfg.p_max == 4);
  System sys = cfg.make_system();
  CHECK(sys.interaction.size() == 7);
  CHECK(sys.blocking.nblocks() == 4);

  auto bad_m = chain_config_json(8, 0.1);
  bad_m["M"] = 3.5;  // outside (1, e)
  CHECK_THROWS_AS(parse_config(bad_m, "."), ValidationError);

  auto bad_caps = chain_config_json(8, 0.1);
  bad_caps["caps"]["n_max"] = 0;
  CHECK_THROWS_AS(parse_config(bad_caps, "."), ValidationError);

  auto bad_boundary = chain_config_json(8, 0.1);
  bad_boundary["boundary"] = "twisted";
  CHECK_THROWS_AS(parse_config(bad_boundary, "."), ValidationError);

  auto bad_blocks = chain_config_json(8, 0.1);
  bad_blocks["blocks"] = {3};
  CHECK_THROWS_AS(parse_config(bad_blocks, ".").make_blocking(), ValidationError);

  auto outside = chain_config_json(4, 0.1);
  outside["couplings"]["explicit"] = {{{"sites", {{7}}}, {"value", 0.5}}};
  auto cfg2 = parse_config(outside, ".");
  CHECK_THROWS_AS(cfg2.make_system(), std::domain_error);
}

TEST_CASE("run_exact writes checksummed tables with the closed-form values") {
  TempDir tmp("exact");
  RunContext ctx{parse_config(chain_config_json(4, 0.2), "."), tmp.path, 1};
  CHECK(run_exact(ctx) == 0);

  const std::string jprime = slurp(tmp.path / "jprime.tsv");
  CHECK(table_checksum_ok(jprime));
  Blocking b({4}, {2});
  const std::string cell = table_lookup(jprime, "y0(0);y1(1)", 1);
  REQUIRE(!cell.empty());
  CHECK(std::stod(cell) == doctest::Approx(0.03897674269391621).epsilon(1e-12));

  CHECK(table_checksum_ok(slurp(tmp.path / "wtable.tsv")));
  CHECK(table_checksum_ok(slurp(tmp.path / "jacobian.tsv")));
  CHECK(fs::exists(tmp.path / "exact_manifest.json"));

  // reruns are bit-identical, with any thread count
  const std::string first = slurp(tmp.path / "jacobian.tsv");
  RunContext ctx8{parse_config(chain_config_json(4, 0.2), "."), tmp.path, 8};
  CHECK(run_exact(ctx8) == 0);
  CHECK(slurp(tmp.path / "jacobian.tsv") == first);
}

TEST_CASE("run_expand reports per-order residuals and polymer dumps") {
  TempDir tmp("expand");
  RunContext ctx{parse_config(chain_config_json(8, 0.1), "."), tmp.path, 2};
  CHECK(run_expand(ctx) == 0);
  const std::string orders = slurp(tmp.path / "expansion_orders.tsv");
  CHECK(table_checksum_ok(orders));
  // residuals decrease with the truncation order
  std::vector<double> residuals;
  std::istringstream in(orders);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'p') continue;
    std::istringstream row(line);
    std::string p, terms, res;
    std::getline(row, p, '\t');
    std::getline(row, terms, '\t');
    std::getline(row, res, '\t');
    residuals.push_back(std::stod(res));
  }
  REQUIRE(residuals.size() == 4);
  for (size_t i = 1; i < residuals.size(); ++i) CHECK(residuals[i] < residuals[i - 1]);
  CHECK(table_checksum_ok(slurp(tmp.path / "polymers.tsv")));
  CHECK(table_checksum_ok(slurp(tmp.path / "expansion_couplings.tsv")));
}

TEST_CASE("run_kp emits pass and fail certificates") {
  TempDir tmp("kp");
  const double thr = 0.0055471785145822473;
  const double cold_k = 0.9 * thr / (2.0 * std::exp(2.0));
  RunContext cold{parse_config(chain_config_json(8, cold_k), "."), tmp.path / "cold", 1};
  CHECK(run_kp(cold) == 0);
  const std::string cert = slurp(tmp.path / "cold" / "kp_certificate.tsv");
  CHECK(cert.find("# overall pass") != std::string::npos);
  CHECK(cert.find("# threshold_pass yes") != std::string::npos);
  // the sampled unreduced-condition spot checks all pass below the threshold
  const std::string spot = slurp(tmp.path / "cold" / "kp_general_spot.tsv");
  CHECK(table_checksum_ok(spot));
  CHECK(spot.find("fail") == std::string::npos);

  RunContext hot{parse_config(chain_config_json(8, 0.7), "."), tmp.path / "hot", 1};
  CHECK(run_kp(hot) == 0);  // a fail certificate is still a successful run
  const std::string hcert = slurp(tmp.path / "hot" / "kp_certificate.tsv");
  CHECK(hcert.find("# overall fail") != std::string::npos);
}

TEST_CASE("run_validate_kernel distinguishes good and broken kernels") {
  TempDir tmp("vk");
  RunContext good{parse_config(chain_config_json(4, 0.1), "."), tmp.path / "good", 1};
  CHECK(run_validate_kernel(good) == 0);
  CHECK(slurp(tmp.path / "good" / "kernel_report.tsv").find("# overall pass") !=
        std::string::npos);

  // broken custom table: fails normalization
  const fs::path table = tmp.path / "broken.tsv";
  {
    std::ofstream out(table);
    out << "11 2 1\n10 2 1\n01 2 1\n00 2 1\n";
  }
  auto j = chain_config_json(4, 0.1);
  j["kernel"] = {{"type", "custom"}, {"file", table.string()}};
  RunContext bad{parse_config(j, tmp.path.string()), tmp.path / "bad", 1};
  CHECK(run_validate_kernel(bad) == 2);
  CHECK(slurp(tmp.path / "bad" / "kernel_report.tsv").find("# overall fail") !=
        std::string::npos);
}

TEST_CASE("run_band writes a decay profile with bound columns") {
  TempDir tmp("band");
  auto j = chain_config_json(8, 3e-4);
  j["band"] = {{"P", 0.75}, {"Q", 0.75}, {"Kc", 0.75}};
  j["jacobian"] = {{"w_max_body", 2}, {"z_max_body", 2}};
  RunContext ctx{parse_config(j, "."), tmp.path, 2};
  CHECK(run_band(ctx) == 0);
  const std::string prof = slurp(tmp.path / "band_profile.tsv");
  CHECK(table_checksum_ok(prof));
  CHECK(prof.find("# threshold_pass yes") != std::string::npos);
  // envelope decreases from l=0 outward
  std::vector<double> env;
  std::istringstream in(prof);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'l') continue;
    std::istringstream row(line);
    std::string l, pairs, mx;
    std::getline(row, l, '\t');
    std::getline(row, pairs, '\t');
    std::getline(row, mx, '\t');
    env.push_back(std::stod(mx));
  }
  REQUIRE(env.size() >= 3);
  // entries two or more blocks out sit at the engine's cancellation floor, so
  // compare envelopes clamped to the measurement floor
  for (size_t i = 1; i < env.size(); ++i)
    CHECK(std::max(env[i], 1e-13) <= std::max(env[i - 1], 1e-13) * (1.0 + 1e-12));
}

TEST_CASE("run_bounds emits the golden report document") {
  TempDir tmp("bounds");
  RunContext ctx{parse_config(chain_config_json(8, 3e-4), "."), tmp.path, 1};
  CHECK(run_bounds(ctx) == 0);
  nlohmann::json rep;
  std::ifstream in(tmp.path / "bounds_report.json");
  REQUIRE(in);
  in >> rep;
  CHECK(std::abs(rep["threshold"].get<double>() - 0.0055471) < 1e-6);
  CHECK(rep["threshold_pass"].get<bool>());
  CHECK(rep["rho"].get<double>() < 1.0);
  CHECK(rep["abar"].size() == 12);
  CHECK(rep["eps_tail"].size() == 5);
  CHECK(rep["linearization_majorant"]["value"].get<double>() ==
        doctest::Approx(20184.6901292298).epsilon(1e-8));
  // rerun: bit-identical document
  const std::string first = slurp(tmp.path / "bounds_report.json");
  RunContext again{parse_config(chain_config_json(8, 3e-4), "."), tmp.path, 4};
  CHECK(run_bounds(again) == 0);
  CHECK(slurp(tmp.path / "bounds_report.json") == first);
}

TEST_CASE("run_linearize compares against the majorant") {
  TempDir tmp("lin");
  auto j = chain_config_json(4, 0.0);
  j["couplings"] = nlohmann::json::object();
  j["direction"] = {{{"sites", {{0}}}, {"value", 1.0}}};
  RunContext ctx{parse_config(j, "."), tmp.path, 1};
  CHECK(run_linearize(ctx) == 0);
  const std::string table = slurp(tmp.path / "linearize.tsv");
  CHECK(table_checksum_ok(table));
  const std::string v = table_lookup(table, "y0(0)", 1);
  REQUIRE(!v.empty());
  CHECK(std::stod(v) == doctest::Approx(1.0).epsilon(1e-12));

  auto empty_dir = chain_config_json(4, 0.1);
  RunContext bad{parse_config(empty_dir, "."), tmp.path / "bad", 1};
  CHECK_THROWS_AS(run_linearize(bad), ValidationError);
}

TEST_CASE("jacobian support selection modes") {
  auto cfg = parse_config(chain_config_json(6, 0.1), ".");
  System sys = cfg.make_system();
  auto from_couplings = jacobian_supports(sys, "couplings", 2);
  CHECK(from_couplings.size() == 5);  // the five bonds
  auto from_subsets = jacobian_supports(sys, "subsets", 2);
  CHECK(from_subsets.size() == 6 + 15);
}

TEST_CASE("requested outputs restrict what a run writes") {
  TempDir tmp("outputs");
  auto j = chain_config_json(4, 0.2);
  j["outputs"] = {"jprime"};
  RunContext ctx{parse_config(j, "."), tmp.path, 1};
  CHECK(run_exact(ctx) == 0);
  CHECK(fs::exists(tmp.path / "jprime.tsv"));
  CHECK_FALSE(fs::exists(tmp.path / "wtable.tsv"));
  CHECK_FALSE(fs::exists(tmp.path / "jacobian.tsv"));
  CHECK(fs::exists(tmp.path / "exact_manifest.json"));
}

TEST_CASE("exit codes by error family") {
  auto code_of = [](auto&& fn) {
    try {
      fn();
      return 0;
    } catch (...) {
      return exit_code_for_current_exception();
    }
  };
  CHECK(code_of([] { throw ValidationError("x"); }) == 2);
  CHECK(code_of([] { throw std::domain_error("x"); }) == 2);
  CHECK(code_of([] { throw CapError("x"); }) == 3);
  CHECK(code_of([] { throw NumericError("x"); }) == 4);
  CHECK(code_of([] { throw std::runtime_error("x"); }) == 1);

  // cap refusal travels out of the runner
  TempDir tmp("caps");
  auto j = chain_config_json(30, 0.1);
  RunContext ctx{parse_config(j, "."), tmp.path, 1};
  CHECK(code_of([&] { run_exact(ctx); }) == 3);
}

TEST_CASE("run_subcommand dispatch") {
  TempDir tmp("dispatch");
  RunContext ctx{parse_config(chain_config_json(4, 0.1), "."), tmp.path, 1};
  CHECK(run_subcommand("validate-kernel", ctx) == 0);
  CHECK_THROWS_AS(run_subcommand("no-such-command", ctx), ValidationError);
}
