#include "fsm/partition.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <mutex>
#include <numeric>

#include "fsm/errors.hpp"

namespace fsm {

namespace {

std::vector<int> canonical_labels(std::span<const int> raw) {
  std::map<int, int> relabel;
  std::vector<int> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = relabel.try_emplace(raw[i], static_cast<int>(relabel.size()));
    out[i] = it->second;
  }
  return out;
}

void check_same_size(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) {
    throw DimensionError("partitions of different ground sets: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

void check_noncrossing(const Partition& p, const char* what) {
  if (!is_noncrossing(p)) {
    throw DomainError(std::string(what) + " requires a noncrossing partition, got " + p.to_string());
  }
}

// Placing element i into block `label` (RGS prefix labels[0..i-1]) creates a
// crossing iff some c strictly between the last element of that block and i
// belongs to a block opened before that last element.
bool placement_crosses(std::span<const int> labels, std::span<const int> first, std::span<const int> last,
                       int i, int label) {
  if (last[label] < 0) return false;
  for (int c = last[label] + 1; c < i; ++c) {
    if (first[labels[c]] < last[label]) return true;
  }
  return false;
}

template <class Visit>
void generate(int k, bool noncrossing_only, Visit&& visit) {
  std::vector<int> labels(k, 0);
  std::vector<int> first(k, -1), last(k, -1);
  auto rec = [&](auto&& self, int i, int used) -> void {
    if (i == k) {
      visit(labels);
      return;
    }
    for (int b = 0; b <= used && b < k; ++b) {
      if (noncrossing_only && b < used && placement_crosses(labels, first, last, i, b)) continue;
      const int saved_first = first[b], saved_last = last[b];
      labels[i] = b;
      if (first[b] < 0) first[b] = i;
      last[b] = i;
      self(self, i + 1, b == used ? used + 1 : used);
      first[b] = saved_first;
      last[b] = saved_last;
    }
  };
  labels[0] = 0;
  first[0] = last[0] = 0;
  rec(rec, 1, 1);
}

void check_guard(int k, int max_k, const char* what) {
  if (k < 1 || k > max_k) {
    throw SizeGuardError(std::string(what) + ": k = " + std::to_string(k) + " outside [1, " +
                         std::to_string(max_k) + "]");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Partition

Partition Partition::from_labels(std::vector<int> labels) {
  if (labels.empty()) throw DomainError("partition of an empty ground set");
  int next = 0;
  for (int l : labels) {
    if (l < 0 || l > next) throw DomainError("labels are not a restricted growth string");
    if (l == next) ++next;
  }
  Partition p;
  p.blocks_.assign(next, {});
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) p.blocks_[labels[i]].push_back(i);
  p.labels_ = std::move(labels);
  return p;
}

Partition Partition::from_blocks(int k, std::vector<std::vector<int>> blocks) {
  if (k < 1) throw DomainError("partition of an empty ground set");
  std::vector<int> raw(k, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) throw DomainError("empty block");
    for (int e : blocks[b]) {
      if (e < 0 || e >= k) throw DomainError("element " + std::to_string(e + 1) + " outside [1, " + std::to_string(k) + "]");
      if (raw[e] >= 0) throw DomainError("element " + std::to_string(e + 1) + " appears twice");
      raw[e] = static_cast<int>(b);
    }
  }
  for (int i = 0; i < k; ++i) {
    if (raw[i] < 0) throw DomainError("element " + std::to_string(i + 1) + " is not covered");
  }
  return from_labels(canonical_labels(raw));
}

Partition Partition::parse(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') {
    throw ParseError("partition must look like ((1,2)(3)), got '" + std::string(text) + "'");
  }
  std::vector<std::vector<int>> blocks;
  std::size_t pos = 1;
  int max_element = 0;
  while (pos + 1 < s.size()) {
    if (s[pos] != '(') throw ParseError("expected '(' at offset " + std::to_string(pos) + " in '" + s + "'");
    auto close = s.find(')', pos);
    if (close == std::string::npos) throw ParseError("unbalanced parentheses in '" + s + "'");
    std::vector<int> block;
    std::size_t start = pos + 1;
    while (start <= close) {
      auto comma = s.find(',', start);
      auto end = std::min(comma == std::string::npos ? close : comma, close);
      auto token = s.substr(start, end - start);
      if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        throw ParseError("bad element '" + token + "' in '" + s + "'");
      }
      int e = std::stoi(token);
      if (e < 1) throw ParseError("elements are 1-based, got 0 in '" + s + "'");
      block.push_back(e - 1);
      max_element = std::max(max_element, e);
      start = end + 1;
    }
    blocks.push_back(std::move(block));
    pos = close + 1;
  }
  if (blocks.empty()) throw ParseError("partition without blocks: '" + s + "'");
  try {
    return from_blocks(max_element, std::move(blocks));
  } catch (const DomainError& e) {
    throw ParseError(std::string(e.what()) + " in '" + s + "'");
  }
}

Partition Partition::finest(int k) {
  std::vector<int> labels(k);
  std::iota(labels.begin(), labels.end(), 0);
  return from_labels(std::move(labels));
}

Partition Partition::coarsest(int k) { return from_labels(std::vector<int>(k, 0)); }

Partition Partition::intervals(std::span<const int> sizes) {
  std::vector<int> labels;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (sizes[b] < 1) throw DomainError("interval block of size < 1");
    labels.insert(labels.end(), sizes[b], static_cast<int>(b));
  }
  return from_labels(std::move(labels));
}

std::string Partition::to_string() const {
  std::string out = "(";
  for (const auto& b : blocks_) {
    out += '(';
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(b[i] + 1);
    }
    out += ')';
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration

std::vector<Partition> enumerate_set_partitions(int k, int max_k) {
  check_guard(k, max_k, "enumerate_set_partitions");
  std::vector<Partition> out;
  generate(k, false, [&](const std::vector<int>& labels) { out.push_back(Partition::from_labels(labels)); });
  return out;
}

std::vector<Partition> enumerate_noncrossing(int k, int max_k) {
  check_guard(k, max_k, "enumerate_noncrossing");
  std::vector<Partition> out;
  generate(k, true, [&](const std::vector<int>& labels) { out.push_back(Partition::from_labels(labels)); });
  return out;
}

const std::vector<Partition>& set_partitions(int k) {
  static std::array<std::once_flag, kMaxFullEnumeration + 1> flags;
  static std::array<std::vector<Partition>, kMaxFullEnumeration + 1> cache;
  check_guard(k, kMaxFullEnumeration, "set_partitions");
  std::call_once(flags[k], [k] { cache[k] = enumerate_set_partitions(k); });
  return cache[k];
}

const std::vector<Partition>& noncrossing_partitions(int k) {
  static std::array<std::once_flag, kMaxNoncrossingEnumeration + 1> flags;
  static std::array<std::vector<Partition>, kMaxNoncrossingEnumeration + 1> cache;
  check_guard(k, kMaxNoncrossingEnumeration, "noncrossing_partitions");
  std::call_once(flags[k], [k] { cache[k] = enumerate_noncrossing(k); });
  return cache[k];
}

// ---------------------------------------------------------------------------
// Classification and lattice operations

bool is_noncrossing(const Partition& p) {
  const auto& labels = p.labels();
  const int k = p.size();
  std::vector<int> first(k, -1), last(k, -1);
  for (int i = 0; i < k; ++i) {
    const int b = labels[i];
    if (placement_crosses(labels, first, last, i, b)) return false;
    if (first[b] < 0) first[b] = i;
    last[b] = i;
  }
  return true;
}

bool is_interval_partition(const Partition& p) {
  return std::all_of(p.blocks().begin(), p.blocks().end(),
                     [](const auto& b) { return b.back() - b.front() + 1 == static_cast<int>(b.size()); });
}

bool refines(const Partition& finer, const Partition& coarser) {
  check_same_size(finer, coarser);
  for (const auto& b : finer.blocks()) {
    for (int e : b) {
      if (!coarser.same_block(e, b.front())) return false;
    }
  }
  return true;
}

Partition meet(const Partition& a, const Partition& b) {
  check_same_size(a, b);
  const int k = a.size();
  std::vector<int> raw(k);
  for (int i = 0; i < k; ++i) raw[i] = a.block_of(i) * k + b.block_of(i);
  return Partition::from_labels(canonical_labels(raw));
}

Partition join(const Partition& a, const Partition& b) {
  check_same_size(a, b);
  const int k = a.size();
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Partition* p : {&a, &b}) {
    for (const auto& block : p->blocks()) {
      for (int e : block) parent[find(e)] = find(block.front());
    }
  }
  std::vector<int> raw(k);
  for (int i = 0; i < k; ++i) raw[i] = find(i);
  return Partition::from_labels(canonical_labels(raw));
}

Partition kreweras(const Partition& p) {
  check_noncrossing(p, "kreweras");
  const int k = p.size();
  // predecessor of x in its block, cyclically
  std::vector<int> inverse(k);
  for (const auto& b : p.blocks()) {
    for (std::size_t i = 0; i < b.size(); ++i) inverse[b[i]] = b[(i + b.size() - 1) % b.size()];
  }
  std::vector<int> raw(k, -1);
  int cycle = 0;
  for (int start = 0; start < k; ++start) {
    if (raw[start] >= 0) continue;
    for (int x = start; raw[x] < 0; x = inverse[(x + 1) % k]) raw[x] = cycle;
    ++cycle;
  }
  return Partition::from_labels(canonical_labels(raw));
}

Partition opposite(const Partition& p) {
  const int k = p.size();
  std::vector<int> raw(k);
  for (int i = 0; i < k; ++i) raw[i] = p.block_of(k - 1 - i);
  return Partition::from_labels(canonical_labels(raw));
}

Partition concat(const Partition& p, const Partition& s) {
  std::vector<int> raw = p.labels();
  for (int l : s.labels()) raw.push_back(l + p.block_count());
  return Partition::from_labels(std::move(raw));
}

Partition restrict(const Partition& p, std::span<const int> support) {
  if (support.empty()) throw DomainError("restriction to an empty set");
  std::vector<int> raw;
  raw.reserve(support.size());
  int prev = -1;
  for (int e : support) {
    if (e <= prev || e >= p.size()) throw DomainError("restriction support must be sorted and inside the ground set");
    raw.push_back(p.block_of(e));
    prev = e;
  }
  return Partition::from_labels(canonical_labels(raw));
}

ClassSplit classify_classes(const Partition& p) {
  check_noncrossing(p, "classify_classes");
  ClassSplit split;
  const auto& blocks = p.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const bool covered_by_other = std::any_of(blocks.begin(), blocks.end(), [&](const auto& c) {
      return &c != &blocks[b] && c.front() < blocks[b].front() && c.back() > blocks[b].back();
    });
    if (covered_by_other) {
      split.inner.push_back(blocks[b]);
      split.inner_support.insert(split.inner_support.end(), blocks[b].begin(), blocks[b].end());
    } else {
      split.outer.push_back(blocks[b]);
      std::vector<int> hull(blocks[b].back() - blocks[b].front() + 1);
      std::iota(hull.begin(), hull.end(), blocks[b].front());
      split.covered.push_back(std::move(hull));
    }
  }
  std::sort(split.inner_support.begin(), split.inner_support.end());
  return split;
}

Restriction strictly_covered(const Partition& p, const ClassSplit& split, int i) {
  Restriction r;
  const auto& outer = split.outer.at(i);
  for (int e : split.covered.at(i)) {
    if (!std::binary_search(outer.begin(), outer.end(), e)) r.support.push_back(e);
  }
  if (r.support.empty()) return r;
  r.blocks = restrict(p, r.support).blocks();
  return r;
}

Partition outer_component(const Partition& p, const ClassSplit& split, int i) {
  return restrict(p, split.covered.at(i));
}

Partition inner_partition(const Partition& p, const ClassSplit& split) {
  if (split.inner_support.empty()) throw DomainError("partition has no inner classes: " + p.to_string());
  return restrict(p, split.inner_support);
}

// ---------------------------------------------------------------------------
// Möbius function
//
// Intervals of both lattices factor into products of full intervals:
//   𝒫:  [s, p] ≅ ∏_{B ∈ p} 𝒫(#s-blocks inside B)
//   NC: [s, p] ≅ ∏_{B ∈ p} [s|_B, 1̂] ≅ ∏_{B ∈ p} ∏_{V ∈ K(s|_B)} NC(|V|)
// so μ only needs μ(0̂_n, 1̂_n), which is computed from the defining recursion
// μ(0̂, 1̂) = -Σ_{z < 1̂} μ(0̂, z) and memoized on n.

namespace {

Rational mobius_top(int n, Lattice lattice) {
  static std::mutex mutex;
  static std::map<std::pair<int, Lattice>, Rational> cache;
  if (n == 1) return 1;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({n, lattice}); it != cache.end()) return it->second;
  }
  const auto& lattice_elements = lattice == Lattice::Full ? set_partitions(n) : noncrossing_partitions(n);
  Rational sum = 0;
  for (const auto& z : lattice_elements) {
    if (z.block_count() == 1) continue;
    Rational term = 1;
    for (const auto& b : z.blocks()) term *= mobius_top(static_cast<int>(b.size()), lattice);
    sum += term;
  }
  Rational value = -sum;
  std::lock_guard lock(mutex);
  cache.emplace(std::make_pair(n, lattice), value);
  return value;
}

}  // namespace

Rational mobius(const Partition& lower, const Partition& upper, Lattice lattice) {
  if (!refines(lower, upper)) {
    throw DomainError("mobius: " + lower.to_string() + " does not refine " + upper.to_string());
  }
  Rational result = 1;
  if (lattice == Lattice::Full) {
    for (const auto& b : upper.blocks()) {
      int count = 0;
      for (int e : b) {
        if (lower.block(lower.block_of(e)).front() == e) ++count;
      }
      result *= mobius_top(count, Lattice::Full);
    }
    return result;
  }
  check_noncrossing(lower, "mobius on NC");
  check_noncrossing(upper, "mobius on NC");
  for (const auto& b : upper.blocks()) {
    const Partition complement = kreweras(restrict(lower, b));
    for (const auto& v : complement.blocks()) result *= mobius_top(static_cast<int>(v.size()), Lattice::Noncrossing);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Index sets

IndexCounts kernel_index_counts(const Partition& p, long n) {
  if (n < 1) throw DomainError("kernel_index_counts: N must be positive");
  IndexCounts counts;
  counts.exact = falling_factorial(n, p.block_count());
  counts.at_least = 1;
  for (int i = 0; i < p.block_count(); ++i) counts.at_least *= n;
  return counts;
}

void for_each_index(const Partition& p, int n, IndexSet set,
                    const std::function<void(std::span<const int>)>& visit) {
  if (n < 1) throw DomainError("for_each_index: N must be positive");
  if (kernel_index_counts(p, n).at_least > kMaxIndexIteration) {
    throw SizeGuardError("for_each_index: N^|π| exceeds " + std::to_string(kMaxIndexIteration));
  }
  const int blocks = p.block_count();
  std::vector<int> value(blocks, 0);
  std::vector<int> index(p.size());
  std::vector<char> taken(n, 0);
  auto rec = [&](auto&& self, int b) -> void {
    if (b == blocks) {
      for (int i = 0; i < p.size(); ++i) index[i] = value[p.block_of(i)];
      visit(index);
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (set == IndexSet::Exact && taken[v]) continue;
      value[b] = v;
      taken[v] = 1;
      self(self, b + 1);
      taken[v] = 0;
    }
  };
  rec(rec, 0);
}

}  // namespace fsm
