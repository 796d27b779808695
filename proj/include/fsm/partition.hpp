#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsm/rational.hpp"

namespace fsm {

/// Set partition of {0, ..., k-1}.
///
/// Elements are 0-based in the C++ API and 1-based in the text syntax
/// "((1,6,7)(2,5)(3)(4)(8)(9,10))". The representation is canonical: each
/// block is sorted, blocks are ordered by their minimum, and `labels()` is the
/// restricted growth string (labels()[i] is the index of the block of i).
class Partition {
 public:
  /// Builds from a restricted growth string; throws DomainError otherwise.
  static Partition from_labels(std::vector<int> labels);
  /// Builds from arbitrary blocks covering {0..k-1}; canonicalizes.
  static Partition from_blocks(int k, std::vector<std::vector<int>> blocks);
  static Partition parse(std::string_view text);

  /// 0̂_k: all singletons.
  static Partition finest(int k);
  /// 1̂_k: a single block.
  static Partition coarsest(int k);
  /// Consecutive blocks of the given sizes.
  static Partition intervals(std::span<const int> sizes);

  int size() const { return static_cast<int>(labels_.size()); }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(int b) const { return blocks_[b]; }
  const std::vector<int>& labels() const { return labels_; }
  int block_of(int i) const { return labels_[i]; }
  bool same_block(int i, int j) const { return labels_[i] == labels_[j]; }

  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition& a, const Partition& b) { return a.labels_ <=> b.labels_; }

 private:
  Partition() = default;
  std::vector<int> labels_;
  std::vector<std::vector<int>> blocks_;
};

enum class Lattice { Full, Noncrossing };

/// Default enumeration guards. Both are parameters of the enumerators.
inline constexpr int kMaxFullEnumeration = 10;
inline constexpr int kMaxNoncrossingEnumeration = 12;

/// All of 𝒫(k), lexicographic in the restricted growth string.
std::vector<Partition> enumerate_set_partitions(int k, int max_k = kMaxFullEnumeration);
/// All of NC(k), in the same order as the full enumeration.
std::vector<Partition> enumerate_noncrossing(int k, int max_k = kMaxNoncrossingEnumeration);

/// Shared cached copies of the enumerations (default guards apply).
const std::vector<Partition>& set_partitions(int k);
const std::vector<Partition>& noncrossing_partitions(int k);

bool is_noncrossing(const Partition& p);
bool is_interval_partition(const Partition& p);

/// Lattice order: every block of `finer` lies inside a block of `coarser`.
bool refines(const Partition& finer, const Partition& coarser);
Partition meet(const Partition& a, const Partition& b);
Partition join(const Partition& a, const Partition& b);

/// Kreweras complement, K(π) = π⁻¹γ with γ the cycle (0 1 ... k-1) and blocks
/// read as increasing cycles. |π| + |K(π)| = k + 1.
Partition kreweras(const Partition& p);

/// i ↦ k-1-i.
Partition opposite(const Partition& p);
/// π + σ: σ shifted past π.
Partition concat(const Partition& p, const Partition& s);

/// Restriction of p to `support` (sorted, 0-based), re-indexed onto {0..|support|-1}.
Partition restrict(const Partition& p, std::span<const int> support);

/// Outer/inner decomposition of a noncrossing partition.
struct ClassSplit {
  /// Outer blocks B_1..B_o in increasing order.
  std::vector<std::vector<int>> outer;
  /// Inner blocks, ordered by minimum.
  std::vector<std::vector<int>> inner;
  /// covered[i] = {j : min(B_i) ≤ j ≤ max(B_i)}.
  std::vector<std::vector<int>> covered;
  /// C(π): the union of the inner blocks, sorted.
  std::vector<int> inner_support;

  int outer_count() const { return static_cast<int>(outer.size()); }
  int inner_count() const { return static_cast<int>(inner.size()); }
};

ClassSplit classify_classes(const Partition& p);

/// 𝒾_i(π): restriction of π to covered[i] minus B_i (empty support gives none).
/// Returned as the support together with the re-indexed partition.
struct Restriction {
  std::vector<int> support;
  std::vector<std::vector<int>> blocks;  // in support coordinates
};
Restriction strictly_covered(const Partition& p, const ClassSplit& split, int i);
/// 𝒾'_i(π): restriction of π to covered[i].
Partition outer_component(const Partition& p, const ClassSplit& split, int i);
/// 𝒾(π): restriction of π to C(π); undefined (throws) when there are no inner classes.
Partition inner_partition(const Partition& p, const ClassSplit& split);

/// Möbius function of the interval [lower, upper] of the chosen lattice.
Rational mobius(const Partition& lower, const Partition& upper, Lattice lattice);

struct IndexCounts {
  Integer exact;     // |[N]^k_π|
  Integer at_least;  // |[N]^k_{≥π}|
};
IndexCounts kernel_index_counts(const Partition& p, long n);

enum class IndexSet { Exact, AtLeast };
inline constexpr std::uint64_t kMaxIndexIteration = 10'000'000;

/// Calls `visit` with every v̄ ∈ [N]^k_π (Exact) or [N]^k_{≥π} (AtLeast); entries 0-based.
void for_each_index(const Partition& p, int n, IndexSet set,
                    const std::function<void(std::span<const int>)>& visit);

}  // namespace fsm
