#include "blockrg/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace blockrg {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

TableWriter::TableWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void TableWriter::preamble(const std::string& key, const std::string& value) {
  preamble_.push_back("# " + key + " " + value);
}

void TableWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("table row width mismatch");
  rows_.push_back(cells);
}

std::string TableWriter::render() const {
  std::ostringstream out;
  for (const auto& p : preamble_) out << p << '\n';
  for (size_t i = 0; i < columns_.size(); ++i)
    out << columns_[i] << (i + 1 < columns_.size() ? '\t' : '\n');
  for (const auto& r : rows_)
    for (size_t i = 0; i < r.size(); ++i) out << r[i] << (i + 1 < r.size() ? '\t' : '\n');
  std::string body = out.str();
  char line[32];
  std::snprintf(line, sizeof(line), "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  return body + "# checksum " + line + "\n";
}

void TableWriter::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render();
}

bool table_checksum_ok(const std::string& rendered) {
  const std::string tag = "# checksum ";
  auto pos = rendered.rfind(tag);
  if (pos == std::string::npos) return false;
  const std::string body = rendered.substr(0, pos);
  const std::string hex = rendered.substr(pos + tag.size());
  char line[32];
  std::snprintf(line, sizeof(line), "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  return hex == std::string(line) + "\n";
}

namespace {

std::string coord_tuple(const std::vector<int>& c) {
  std::string out = "(";
  for (size_t i = 0; i < c.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(c[i]);
  }
  return out + ")";
}

std::vector<int> parse_tuple(const std::string& text, size_t& pos) {
  if (pos >= text.size() || text[pos] != '(')
    throw ValidationError("expected '(' in set encoding: " + text);
  ++pos;
  std::vector<int> c;
  int cur = 0, sign = 1;
  bool have = false;
  for (; pos < text.size(); ++pos) {
    char ch = text[pos];
    if (ch == '-') {
      sign = -1;
    } else if (ch >= '0' && ch <= '9') {
      cur = cur * 10 + (ch - '0');
      have = true;
    } else if (ch == ',' || ch == ')') {
      if (!have) throw ValidationError("malformed tuple in " + text);
      c.push_back(sign * cur);
      cur = 0;
      sign = 1;
      have = false;
      if (ch == ')') {
        ++pos;
        return c;
      }
    } else {
      throw ValidationError("unexpected character in set encoding: " + text);
    }
  }
  throw ValidationError("unterminated tuple in " + text);
}

}  // namespace

std::string encode_site_set(const SiteSet& X, const Blocking& b) {
  if (X.empty()) return "-";
  std::string out;
  for (auto id : X) {
    if (!out.empty()) out += ";";
    out += coord_tuple(b.site_coords(id));
  }
  return out;
}

std::string encode_image_set(const ImageSet& Z, const Blocking& b) {
  if (Z.empty()) return "-";
  std::string out;
  for (auto id : Z) {
    if (!out.empty()) out += ";";
    out += "y" + std::to_string(id) + coord_tuple(b.block_coords(id));
  }
  return out;
}

SiteSet decode_site_set(const std::string& text, const Blocking& b) {
  if (text == "-") return SiteSet{};
  std::vector<std::int32_t> ids;
  size_t pos = 0;
  for (;;) {
    auto c = parse_tuple(text, pos);
    SiteId id = b.site_id(c);
    if (id < 0) throw ValidationError("site outside window in " + text);
    ids.push_back(id);
    if (pos >= text.size()) break;
    if (text[pos] != ';') throw ValidationError("expected ';' in " + text);
    ++pos;
  }
  return SiteSet(std::move(ids));
}

ImageSet decode_image_set(const std::string& text, const Blocking& b) {
  if (text == "-") return ImageSet{};
  std::vector<std::int32_t> ids;
  size_t pos = 0;
  for (;;) {
    if (pos >= text.size() || text[pos] != 'y')
      throw ValidationError("expected 'y' prefix in image set " + text);
    ++pos;
    int id = 0;
    bool have = false;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      id = id * 10 + (text[pos] - '0');
      ++pos;
      have = true;
    }
    if (!have) throw ValidationError("missing block index in " + text);
    auto c = parse_tuple(text, pos);
    if (b.block_id(c) != id)
      throw ValidationError("block index and coordinates disagree in " + text);
    ids.push_back(id);
    if (pos >= text.size()) break;
    if (text[pos] != ';') throw ValidationError("expected ';' in " + text);
    ++pos;
  }
  return ImageSet(std::move(ids));
}

std::string encode_spins(SpinMask m, int n) {
  std::string out(static_cast<size_t>(n), '+');
  for (int i = 0; i < n; ++i)
    if ((m >> i) & 1u) out[static_cast<size_t>(i)] = '-';
  return out;
}

}  // namespace blockrg
