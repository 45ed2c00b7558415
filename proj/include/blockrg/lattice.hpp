#pragma once

#include <span>
#include <vector>

#include "blockrg/types.hpp"

namespace blockrg {

/// A finite rectangular window of Z^d partitioned into congruent rectangular
/// blocks. Sites and blocks are flattened row-major (axis 0 most significant),
/// so id order equals lexicographic order on coordinates. Both lattices carry
/// the sup-metric on integer coordinates.
class Blocking {
 public:
  Blocking(std::vector<int> window_extent, std::vector<int> block_extent);

  int dim() const { return static_cast<int>(window_.size()); }
  const std::vector<int>& window_extent() const { return window_; }
  const std::vector<int>& block_extent() const { return block_; }
  const std::vector<int>& grid_extent() const { return grid_; }

  int nsites() const { return nsites_; }
  int nblocks() const { return nblocks_; }
  int block_cardinality() const { return s_; }

  std::vector<int> site_coords(SiteId id) const;
  SiteId site_id(std::span<const int> coords) const;  // -1 if outside
  std::vector<int> block_coords(BlockId id) const;
  BlockId block_id(std::span<const int> coords) const;

  BlockId block_of(SiteId id) const;
  std::span<const SiteId> block_sites(BlockId b) const;

  bool site_in_window(SiteId id) const { return id >= 0 && id < nsites_; }

 private:
  std::vector<int> window_, block_, grid_;
  int nsites_ = 0, nblocks_ = 0, s_ = 0;
  std::vector<BlockId> site_to_block_;
  std::vector<SiteId> block_sites_flat_;  // nblocks_ runs of length s_
};

/// Canonically ordered collection of distinct links (nonempty site sets).
class Hypergraph {
 public:
  Hypergraph() = default;
  explicit Hypergraph(std::vector<SiteSet> links);

  bool empty() const { return links_.empty(); }
  int size() const { return static_cast<int>(links_.size()); }
  const std::vector<SiteSet>& links() const { return links_; }

  auto operator<=>(const Hypergraph&) const = default;

 private:
  std::vector<SiteSet> links_;
};

/// Blocks whose block intersects X. Empty iff X is empty.
ImageSet image_support(const SiteSet& X, const Blocking& b);

/// True iff X1 and X2 both intersect some common block.
bool block_connected(const SiteSet& X1, const SiteSet& X2, const Blocking& b);

/// Partition of g's links into maximal block-connected classes, ordered by
/// least link.
std::vector<Hypergraph> block_components(const Hypergraph& g,
                                         const Blocking& b);

/// inf over w in image_support(W), z in Z of the image-lattice sup-metric.
double image_distance(const SiteSet& W, const ImageSet& Z, const Blocking& b);

/// sup of the original-lattice sup-metric over pairs in X.
double diameter(const SiteSet& X, const Blocking& b);

/// Sup-metric distance between two blocks, in block-grid coordinates.
int block_distance(BlockId a, BlockId z, const Blocking& b);

}  // namespace blockrg
