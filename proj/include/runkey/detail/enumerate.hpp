// Copyright 2026 The runkey Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "runkey/detail/parallel.hpp"
#include "runkey/word.hpp"

namespace runkey::detail {

inline constexpr std::uint64_t kTargetChunks = 256;

/// Depth of the prefix used to split an enumeration of A^len into chunks.
/// Depends only on (n, len) so chunk boundaries never move with the worker count.
inline std::size_t chunk_depth(std::size_t n, std::size_t len) {
  std::size_t p = 0;
  std::uint64_t chunks = 1;
  while (p < len && chunks < kTargetChunks) {
    chunks *= n;
    ++p;
  }
  return p;
}

template <class Acc, class Node, class Step, class Leaf>
void dfs_words(std::size_t n, std::size_t len, std::size_t depth, std::uint64_t index,
               const Node& node, Step& step, Leaf& leaf, Acc& acc) {
  if (depth == len) {
    leaf(node, index, acc);
    return;
  }
  Node child;
  for (std::size_t a = 0; a < n; ++a) {
    if (step(node, depth, static_cast<Symbol>(a), child)) {
      dfs_words(n, len, depth + 1, index * n + a, child, step, leaf, acc);
    }
  }
}

/// Depth-first enumeration of every word in A^len, split into fixed prefix
/// chunks. `step(parent, depth, symbol, child)` builds the child node and
/// returns false to prune the subtree; `leaf(node, index, acc)` sees each
/// surviving word with its base-n index. Returns one accumulator per chunk,
/// in index order.
template <class Acc, class Node, class Step, class Leaf>
std::vector<Acc> enumerate_words(std::size_t n, std::size_t len, const Node& root, Step step,
                                 Leaf leaf, unsigned workers) {
  const std::size_t p = chunk_depth(n, len);
  const std::uint64_t chunks = saturating_pow(n, p);
  return map_indexed<Acc>(chunks, workers, [&](std::size_t c) {
    Acc acc{};
    const Word prefix = word_from_index(c, n, p);
    Node node = root;
    Node child;
    for (std::size_t d = 0; d < p; ++d) {
      if (!step(node, d, prefix[d], child)) return acc;
      node = child;
    }
    Step local_step = step;
    Leaf local_leaf = leaf;
    dfs_words(n, len, p, c, node, local_step, local_leaf, acc);
    return acc;
  });
}

}  // namespace runkey::detail
