#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockrg {

using SiteId = std::int32_t;   // flattened site index in the original window
using BlockId = std::int32_t;  // flattened block index in the image window

// Spin configurations are bitmasks: bit set means spin -1, bit clear means +1.
// Mask 0 is the all-up configuration.
using SpinMask = std::uint64_t;

// Error taxonomy; the CLI maps these onto exit codes.
struct ValidationError : std::runtime_error {  // exit 2
  using std::runtime_error::runtime_error;
};
struct CapError : std::runtime_error {  // exit 3: enumeration cap refusal
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {  // exit 4: vanishing W(sigma') etc.
  using std::runtime_error::runtime_error;
};

inline int parity_sign(SpinMask m) { return (std::popcount(m) & 1) ? -1 : +1; }

/// Ordered, duplicate-free set of lattice ids. The tag keeps subsets of the
/// original window (SiteSet) and of the image window (ImageSet) from mixing.
/// Ids are flattened in row-major order, so id order coincides with
/// lexicographic order on coordinate tuples.
template <class Tag>
class IdSet {
 public:
  IdSet() = default;
  explicit IdSet(std::vector<std::int32_t> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }
  IdSet(std::initializer_list<std::int32_t> ids)
      : IdSet(std::vector<std::int32_t>(ids)) {}

  bool empty() const { return ids_.empty(); }
  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::int32_t>& ids() const { return ids_; }
  std::int32_t operator[](int i) const { return ids_[static_cast<size_t>(i)]; }

  bool contains(std::int32_t id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
  }

  /// Position of id within the set, or -1.
  int index_of(std::int32_t id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return -1;
    return static_cast<int>(it - ids_.begin());
  }

  IdSet unite(const IdSet& other) const {
    std::vector<std::int32_t> out;
    out.reserve(ids_.size() + other.ids_.size());
    std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(),
                   other.ids_.end(), std::back_inserter(out));
    IdSet r;
    r.ids_ = std::move(out);
    return r;
  }

  bool intersects(const IdSet& other) const {
    auto a = ids_.begin();
    auto b = other.ids_.begin();
    while (a != ids_.end() && b != other.ids_.end()) {
      if (*a < *b)
        ++a;
      else if (*b < *a)
        ++b;
      else
        return true;
    }
    return false;
  }

  bool subset_of(const IdSet& other) const {
    return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(),
                         ids_.end());
  }

  /// Bitmask over ids; all ids must be < 64.
  SpinMask mask() const {
    SpinMask m = 0;
    for (auto id : ids_) {
      if (id < 0 || id >= 64)
        throw CapError("id " + std::to_string(id) +
                       " does not fit the 64-bit mask used by the engines");
      m |= SpinMask{1} << id;
    }
    return m;
  }

  static IdSet from_mask(SpinMask m) {
    IdSet r;
    while (m) {
      r.ids_.push_back(std::countr_zero(m));
      m &= m - 1;
    }
    return r;
  }

  auto operator<=>(const IdSet&) const = default;

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

 private:
  std::vector<std::int32_t> ids_;
};

struct SiteTag;
struct ImageTag;
using SiteSet = IdSet<SiteTag>;    // subset of the original window
using ImageSet = IdSet<ImageTag>;  // subset of the image window (block ids)

/// Extract the bits of `full` at the positions listed in `at`, packed in set
/// order. Used to restrict a window-wide spin mask to a support.
template <class Tag>
inline SpinMask subbits(SpinMask full, const IdSet<Tag>& at) {
  SpinMask out = 0;
  int j = 0;
  for (auto id : at) {
    out |= ((full >> id) & 1u) << j;
    ++j;
  }
  return out;
}

}  // namespace blockrg
