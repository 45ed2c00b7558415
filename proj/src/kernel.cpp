#include "blockrg/kernel.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace blockrg {

namespace {
size_t table_size(int s) {
  if (s < 1 || s > 20) throw ValidationError("block cardinality out of range [1,20]");
  return size_t{1} << (s + 1);
}
}  // namespace

Kernel::Kernel(int s, std::string kind, std::vector<double> table)
    : s_(s), kind_(std::move(kind)), table_(std::move(table)) {
  if (table_.size() != table_size(s_))
    throw ValidationError("kernel table must cover all 2^s x 2 arguments");
}

Kernel Kernel::decimation(int s, int offset) {
  if (offset < 0 || offset >= s)
    throw ValidationError("decimation offset must lie inside the block");
  std::vector<double> t(table_size(s));
  for (std::uint32_t cfg = 0; cfg < (1u << s); ++cfg) {
    const int spin = (cfg >> offset) & 1u ? -1 : +1;
    t[(cfg << 1) | 0] = 1.0 + spin;  // sigma' = +1
    t[(cfg << 1) | 1] = 1.0 - spin;  // sigma' = -1
  }
  return Kernel(s, "decimation[" + std::to_string(offset) + "]", std::move(t));
}

Kernel Kernel::majority(int s) {
  if (s % 2 == 0)
    throw ValidationError("majority rule needs odd block cardinality (ties are not broken)");
  std::vector<double> t(table_size(s));
  for (std::uint32_t cfg = 0; cfg < (1u << s); ++cfg) {
    const int sum = s - 2 * std::popcount(cfg);  // set bit = spin -1
    const int sign = sum > 0 ? +1 : -1;
    t[(cfg << 1) | 0] = 1.0 + sign;
    t[(cfg << 1) | 1] = 1.0 - sign;
  }
  return Kernel(s, "majority", std::move(t));
}

Kernel Kernel::constant(int s) {
  return Kernel(s, "constant", std::vector<double>(table_size(s), 1.0));
}

Kernel Kernel::custom(int s, std::vector<double> table, std::string kind) {
  return Kernel(s, std::move(kind), std::move(table));
}

Kernel Kernel::from_file(const std::filesystem::path& path, int s) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open kernel table file " + path.string());
  std::vector<double> t(table_size(s), -1.0);
  std::vector<bool> seen(size_t{1} << s, false);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string bits;
    double tp, tm;
    if (!(row >> bits)) continue;
    if (!(row >> tp >> tm))
      throw ValidationError("kernel table row needs: bits T(sigma,+1) T(sigma,-1)");
    if (static_cast<int>(bits.size()) != s)
      throw ValidationError("kernel table bits must have length s");
    std::uint32_t cfg = 0;
    for (int i = 0; i < s; ++i) {
      char ch = bits[static_cast<size_t>(i)];
      if (ch == '0')
        cfg |= 1u << i;  // '0' = spin -1
      else if (ch != '1')
        throw ValidationError("kernel table bits must be 0/1");
    }
    if (seen[cfg]) throw ValidationError("duplicate kernel table row");
    seen[cfg] = true;
    t[(cfg << 1) | 0] = tp;
    t[(cfg << 1) | 1] = tm;
  }
  for (std::uint32_t cfg = 0; cfg < (1u << s); ++cfg)
    if (!seen[cfg]) throw ValidationError("kernel table missing a block configuration");
  return Kernel(s, "custom[" + path.filename().string() + "]", std::move(t));
}

KernelReport validate(const Kernel& k, double tol) {
  const int s = k.block_size();
  const std::uint32_t ncfg = 1u << s;
  const std::uint32_t full = ncfg - 1;
  KernelReport rep;
  AxiomCheck nonneg{"nonnegativity"}, sym{"symmetry"}, norm{"normalization"},
      marg{"marginal"};

  for (std::uint32_t cfg = 0; cfg < ncfg; ++cfg) {
    for (int sp = 0; sp < 2; ++sp) {
      const double v = k.value(cfg, sp);
      if (v < 0.0 && -v > nonneg.worst_violation) {
        nonneg.worst_violation = -v;
        nonneg.worst_cfg = cfg;
      }
      const double dv = std::abs(v - k.value(cfg ^ full, sp ^ 1));
      if (dv > sym.worst_violation) {
        sym.worst_violation = dv;
        sym.worst_cfg = cfg;
      }
    }
    const double dn = std::abs((k.value(cfg, 0) + k.value(cfg, 1)) / 2.0 - 1.0);
    if (dn > norm.worst_violation) {
      norm.worst_violation = dn;
      norm.worst_cfg = cfg;
    }
  }
  for (int sp = 0; sp < 2; ++sp) {
    double avg = 0.0;
    for (std::uint32_t cfg = 0; cfg < ncfg; ++cfg) avg += k.value(cfg, sp);
    avg /= static_cast<double>(ncfg);
    if (std::abs(avg - 1.0) > marg.worst_violation) marg.worst_violation = std::abs(avg - 1.0);
  }

  nonneg.pass = nonneg.worst_violation == 0.0;
  sym.pass = sym.worst_violation <= tol;
  norm.pass = norm.worst_violation <= tol;
  marg.pass = marg.worst_violation <= tol;
  rep.axioms = {nonneg, sym, norm, marg};
  rep.pass = nonneg.pass && sym.pass && norm.pass && marg.pass;
  return rep;
}

namespace {
std::string cfg_string(std::uint32_t cfg, int s) {
  std::string out(static_cast<size_t>(s), '+');
  for (int i = 0; i < s; ++i)
    if ((cfg >> i) & 1u) out[static_cast<size_t>(i)] = '-';
  return out;
}
}  // namespace

void require_valid(const Kernel& k, double tol) {
  auto rep = validate(k, tol);
  if (rep.pass) return;
  std::string msg = "kernel '" + k.kind() + "' rejected:";
  for (const auto& a : rep.axioms)
    if (!a.pass)
      msg += " " + a.axiom + " fails at block configuration " +
             cfg_string(a.worst_cfg, k.block_size()) + " (violation " +
             std::to_string(a.worst_violation) + ");";
  throw ValidationError(msg);
}

}  // namespace blockrg
