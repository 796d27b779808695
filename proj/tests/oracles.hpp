#pragma once

// Slow, independent reference implementations used as test oracles.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "fsm/partition.hpp"
#include "fsm/process.hpp"
#include "fsm/rational.hpp"

namespace oracle {

using Blocks = std::vector<std::vector<int>>;

inline Blocks canonical(Blocks b) {
  for (auto& x : b) std::sort(x.begin(), x.end());
  std::sort(b.begin(), b.end());
  return b;
}

// Generates partitions of {0..k-1} by inserting element n into each block or a fresh one.
inline std::vector<Blocks> partitions_by_insertion(int k) {
  std::vector<Blocks> current{{}};
  for (int n = 0; n < k; ++n) {
    std::vector<Blocks> next;
    for (const auto& p : current) {
      for (std::size_t b = 0; b < p.size(); ++b) {
        auto q = p;
        q[b].push_back(n);
        next.push_back(q);
      }
      auto q = p;
      q.push_back({n});
      next.push_back(q);
    }
    current = std::move(next);
  }
  for (auto& p : current) p = canonical(p);
  return current;
}

inline bool crossing_free(const Blocks& p) {
  for (std::size_t x = 0; x < p.size(); ++x) {
    for (std::size_t y = 0; y < p.size(); ++y) {
      if (x == y) continue;
      for (int a : p[x]) {
        for (int c : p[x]) {
          for (int b : p[y]) {
            for (int d : p[y]) {
              if (a < b && b < c && c < d) return false;
            }
          }
        }
      }
    }
  }
  return true;
}

inline Blocks blocks_of(const fsm::Partition& p) { return canonical(p.blocks()); }

inline bool finer(const Blocks& s, const Blocks& p) {
  for (const auto& b : s) {
    bool inside = false;
    for (const auto& c : p) {
      inside = inside || std::includes(c.begin(), c.end(), b.begin(), b.end());
    }
    if (!inside) return false;
  }
  return true;
}

// Kreweras complement by maximizing over candidates on the interleaved 2k points 0, 0', 1, 1', ...
inline Blocks kreweras_brute(const Blocks& p, int k) {
  Blocks best;
  std::size_t best_count = static_cast<std::size_t>(k) + 1;
  for (const auto& s : partitions_by_insertion(k)) {
    Blocks joint;
    for (const auto& b : p) {
      std::vector<int> x;
      for (int e : b) x.push_back(2 * e);
      joint.push_back(x);
    }
    for (const auto& b : s) {
      std::vector<int> x;
      for (int e : b) x.push_back(2 * e + 1);
      joint.push_back(x);
    }
    if (crossing_free(joint) && s.size() < best_count) {
      best = s;
      best_count = s.size();
    }
  }
  return best;
}

// μ(x, y) on an explicit list of lattice elements via μ(x,x)=1, μ(x,y) = -Σ_{x≤z<y} μ(x,z).
inline fsm::Rational mobius_recursive(const std::vector<Blocks>& lattice, const Blocks& x, const Blocks& y) {
  std::map<Blocks, fsm::Rational> memo;
  std::function<fsm::Rational(const Blocks&)> mu = [&](const Blocks& z) -> fsm::Rational {
    if (z == x) return 1;
    if (auto it = memo.find(z); it != memo.end()) return it->second;
    fsm::Rational sum = 0;
    for (const auto& w : lattice) {
      if (w != z && finer(x, w) && finer(w, z)) sum += mu(w);
    }
    return memo[z] = -sum;
  };
  return mu(y);
}

inline fsm::Rational rpow(const fsm::Rational& b, int e) {
  fsm::Rational r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// φ(X^{(w_1)}(J_1) ⋯ X^{(w_n)}(J_n)) = Σ_{σ ∈ NC(n)} ∏_{V ∈ σ} |∩_{i∈V} J_i| R(w|_V).
inline fsm::Rational increment_word_moment(const fsm::ProcessSpec& spec, const std::vector<int>& word,
                                           const std::vector<fsm::Interval>& intervals) {
  const int n = static_cast<int>(word.size());
  static std::map<int, std::vector<Blocks>> nc_cache;
  if (!nc_cache.count(n)) {
    for (const auto& s : partitions_by_insertion(n)) {
      if (crossing_free(s)) nc_cache[n].push_back(s);
    }
  }
  fsm::Rational total = 0;
  for (const auto& s : nc_cache[n]) {
    fsm::Rational term = 1;
    for (const auto& v : s) {
      fsm::Rational lo = intervals[v[0]].begin, hi = intervals[v[0]].end;
      std::vector<int> sub;
      for (int e : v) {
        lo = std::max(lo, intervals[e].begin);
        hi = std::min(hi, intervals[e].end);
        sub.push_back(word[e]);
      }
      if (hi <= lo) {
        term = 0;
        break;
      }
      term *= (hi - lo) * spec.cumulant(sub);
    }
    total += term;
  }
  return total;
}

// Σ over index tuples v̄ ∈ [N]^k with ker(v̄) = p (exact) or ker(v̄) ≥ p of τ(X^{(1)}(I_{v_1}) ⋯ X^{(k)}(I_{v_k})).
inline fsm::Rational brute_force_expect(const fsm::Partition& p, const fsm::Subdivision& s,
                                        const fsm::ProcessSpec& spec, bool exact) {
  const int k = p.size();
  const int n = s.size();
  std::vector<int> word(k);
  for (int i = 0; i < k; ++i) word[i] = i;
  fsm::Rational total = 0;
  std::vector<int> v(k, 0);
  for (;;) {
    bool ok = true;
    for (int a = 0; a < k && ok; ++a) {
      for (int b = 0; b < k && ok; ++b) {
        const bool same = v[a] == v[b];
        if (p.same_block(a, b) && !same) ok = false;
        if (exact && !p.same_block(a, b) && same) ok = false;
      }
    }
    if (ok) {
      std::vector<fsm::Interval> intervals;
      for (int a = 0; a < k; ++a) intervals.push_back(s.interval(v[a]));
      total += increment_word_moment(spec, word, intervals);
    }
    int pos = k - 1;
    while (pos >= 0 && ++v[pos] == n) v[pos--] = 0;
    if (pos < 0) break;
  }
  return total;
}

inline long bell(int k) { return static_cast<long>(partitions_by_insertion(k).size()); }

inline long catalan(int n) {
  long c = 1;
  for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

}  // namespace oracle

namespace oracle {

struct FactorPattern {
  fsm::Partition partition;
  bool exact;  // kernel equal to the partition (St) or coarser (Pr)
};

// τ of a product of Riemann sums by summing over every index tuple in [N]^K.
inline fsm::Rational brute_force_product(const std::vector<FactorPattern>& factors, const fsm::Subdivision& s,
                                         const fsm::ProcessSpec& spec) {
  int total = 0;
  std::vector<int> offsets;
  for (const auto& f : factors) {
    offsets.push_back(total);
    total += f.partition.size();
  }
  std::vector<int> word(total);
  for (int i = 0; i < total; ++i) word[i] = i;
  const int n = s.size();
  fsm::Rational sum = 0;
  std::vector<int> v(total, 0);
  for (;;) {
    bool ok = true;
    for (std::size_t f = 0; f < factors.size() && ok; ++f) {
      const auto& p = factors[f].partition;
      for (int a = 0; a < p.size() && ok; ++a) {
        for (int b = 0; b < p.size() && ok; ++b) {
          const bool same = v[offsets[f] + a] == v[offsets[f] + b];
          if (p.same_block(a, b) && !same) ok = false;
          if (factors[f].exact && !p.same_block(a, b) && same) ok = false;
        }
      }
    }
    if (ok) {
      std::vector<fsm::Interval> intervals;
      for (int a = 0; a < total; ++a) intervals.push_back(s.interval(v[a]));
      sum += increment_word_moment(spec, word, intervals);
    }
    int pos = total - 1;
    while (pos >= 0 && ++v[pos] == n) v[pos--] = 0;
    if (pos < 0) break;
  }
  return sum;
}

// Value at x = 0 of the polynomial through (x_i, y_i).
inline fsm::Rational lagrange_at_zero(const std::vector<fsm::Rational>& x, const std::vector<fsm::Rational>& y) {
  fsm::Rational total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    fsm::Rational w = y[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) w *= x[j] / (x[j] - x[i]);
    }
    total += w;
  }
  return total;
}

}  // namespace oracle
