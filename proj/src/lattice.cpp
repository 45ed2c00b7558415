#include "blockrg/lattice.hpp"

#include <cstdlib>
#include <map>
#include <numeric>

namespace blockrg {

namespace {

long long checked_product(const std::vector<int>& v, const char* what) {
  long long p = 1;
  for (int e : v) {
    if (e <= 0) throw ValidationError(std::string(what) + " extents must be positive");
    p *= e;
    if (p > (1LL << 31)) throw CapError(std::string(what) + " too large");
  }
  return p;
}

}  // namespace

Blocking::Blocking(std::vector<int> window_extent, std::vector<int> block_extent)
    : window_(std::move(window_extent)), block_(std::move(block_extent)) {
  if (window_.empty() || window_.size() != block_.size())
    throw ValidationError("window and block extents must have equal positive dimension");
  checked_product(window_, "window");
  checked_product(block_, "block");
  grid_.resize(window_.size());
  for (size_t i = 0; i < window_.size(); ++i) {
    if (window_[i] % block_[i] != 0)
      throw ValidationError("block extent must divide window extent on every axis");
    grid_[i] = window_[i] / block_[i];
  }
  nsites_ = static_cast<int>(checked_product(window_, "window"));
  nblocks_ = static_cast<int>(checked_product(grid_, "grid"));
  s_ = nsites_ / nblocks_;

  site_to_block_.resize(static_cast<size_t>(nsites_));
  block_sites_flat_.assign(static_cast<size_t>(nsites_), 0);
  std::vector<int> fill(static_cast<size_t>(nblocks_), 0);
  for (SiteId id = 0; id < nsites_; ++id) {
    auto c = site_coords(id);
    std::vector<int> bc(c.size());
    for (size_t i = 0; i < c.size(); ++i) bc[i] = c[i] / block_[i];
    BlockId blk = block_id(bc);
    site_to_block_[static_cast<size_t>(id)] = blk;
    block_sites_flat_[static_cast<size_t>(blk) * s_ + fill[static_cast<size_t>(blk)]++] = id;
  }
  // ascending site ids within each block follow from the id scan order
}

std::vector<int> Blocking::site_coords(SiteId id) const {
  if (!site_in_window(id)) throw std::domain_error("site id outside window");
  std::vector<int> c(window_.size());
  int rest = id;
  for (int i = dim() - 1; i >= 0; --i) {
    c[static_cast<size_t>(i)] = rest % window_[static_cast<size_t>(i)];
    rest /= window_[static_cast<size_t>(i)];
  }
  return c;
}

SiteId Blocking::site_id(std::span<const int> coords) const {
  if (coords.size() != window_.size()) throw std::domain_error("coordinate dimension mismatch");
  long long id = 0;
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= window_[i]) return -1;
    id = id * window_[i] + coords[i];
  }
  return static_cast<SiteId>(id);
}

std::vector<int> Blocking::block_coords(BlockId id) const {
  if (id < 0 || id >= nblocks_) throw std::domain_error("block id outside image window");
  std::vector<int> c(grid_.size());
  int rest = id;
  for (int i = dim() - 1; i >= 0; --i) {
    c[static_cast<size_t>(i)] = rest % grid_[static_cast<size_t>(i)];
    rest /= grid_[static_cast<size_t>(i)];
  }
  return c;
}

BlockId Blocking::block_id(std::span<const int> coords) const {
  if (coords.size() != grid_.size()) throw std::domain_error("coordinate dimension mismatch");
  long long id = 0;
  for (size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= grid_[i]) return -1;
    id = id * grid_[i] + coords[i];
  }
  return static_cast<BlockId>(id);
}

BlockId Blocking::block_of(SiteId id) const {
  if (!site_in_window(id)) throw std::domain_error("site id outside window");
  return site_to_block_[static_cast<size_t>(id)];
}

std::span<const SiteId> Blocking::block_sites(BlockId b) const {
  if (b < 0 || b >= nblocks_) throw std::domain_error("block id outside image window");
  return {block_sites_flat_.data() + static_cast<size_t>(b) * s_, static_cast<size_t>(s_)};
}

Hypergraph::Hypergraph(std::vector<SiteSet> links) : links_(std::move(links)) {
  for (const auto& l : links_)
    if (l.empty()) throw std::domain_error("hypergraph links must be nonempty");
  std::sort(links_.begin(), links_.end());
  links_.erase(std::unique(links_.begin(), links_.end()), links_.end());
}

ImageSet image_support(const SiteSet& X, const Blocking& b) {
  std::vector<std::int32_t> blocks;
  blocks.reserve(X.ids().size());
  for (auto id : X) blocks.push_back(b.block_of(id));
  return ImageSet(std::move(blocks));
}

bool block_connected(const SiteSet& X1, const SiteSet& X2, const Blocking& b) {
  return image_support(X1, b).intersects(image_support(X2, b));
}

std::vector<Hypergraph> block_components(const Hypergraph& g, const Blocking& b) {
  const auto& links = g.links();
  const int n = g.size();
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  };
  auto unite = [&](int x, int y) {
    x = find(x);
    y = find(y);
    if (x != y) parent[static_cast<size_t>(std::max(x, y))] = std::min(x, y);
  };

  std::map<BlockId, int> first_link_on_block;
  for (int i = 0; i < n; ++i) {
    for (auto blk : image_support(links[static_cast<size_t>(i)], b)) {
      auto [it, inserted] = first_link_on_block.try_emplace(blk, i);
      if (!inserted) unite(it->second, i);
    }
  }

  std::map<int, std::vector<SiteSet>> groups;  // keyed by least link index
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(links[static_cast<size_t>(i)]);
  std::vector<Hypergraph> out;
  out.reserve(groups.size());
  for (auto& [root, ls] : groups) out.emplace_back(std::move(ls));
  return out;
}

int block_distance(BlockId a, BlockId z, const Blocking& b) {
  auto ca = b.block_coords(a);
  auto cz = b.block_coords(z);
  int d = 0;
  for (size_t i = 0; i < ca.size(); ++i) d = std::max(d, std::abs(ca[i] - cz[i]));
  return d;
}

double image_distance(const SiteSet& W, const ImageSet& Z, const Blocking& b) {
  if (W.empty() || Z.empty()) throw std::domain_error("image_distance requires nonempty arguments");
  ImageSet wp = image_support(W, b);
  int best = std::numeric_limits<int>::max();
  for (auto w : wp)
    for (auto z : Z) best = std::min(best, block_distance(w, z, b));
  return static_cast<double>(best);
}

double diameter(const SiteSet& X, const Blocking& b) {
  if (X.empty()) throw std::domain_error("diameter requires a nonempty set");
  const auto& ids = X.ids();
  std::vector<std::vector<int>> coords;
  coords.reserve(ids.size());
  for (auto id : ids) coords.push_back(b.site_coords(id));
  int best = 0;
  for (size_t i = 0; i < coords.size(); ++i)
    for (size_t j = i + 1; j < coords.size(); ++j) {
      int d = 0;
      for (size_t k = 0; k < coords[i].size(); ++k)
        d = std::max(d, std::abs(coords[i][k] - coords[j][k]));
      best = std::max(best, d);
    }
  return static_cast<double>(best);
}

}  // namespace blockrg
