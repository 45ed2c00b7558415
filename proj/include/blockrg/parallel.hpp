#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace blockrg {

/// Runs fn(chunk) for chunk in [0, n_chunks) on up to `threads` workers.
/// Chunk boundaries are the caller's business; keeping them independent of
/// the worker count is what makes reductions bit-identical for any
/// --threads value (per-chunk partials are combined serially, in chunk
/// order, by the caller).
void parallel_for_chunks(int n_chunks, int threads,
                         const std::function<void(int)>& fn);

/// Fixed chunking of [0, total): at most max_chunks ranges, sized from the
/// problem alone. Returns the number of chunks; chunk i covers
/// [bounds[i], bounds[i+1]).
int fixed_chunks(std::uint64_t total, int max_chunks,
                 std::vector<std::uint64_t>& bounds);

}  // namespace blockrg
