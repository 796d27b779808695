#include "fsm/cumulants.hpp"

#include <array>
#include <bit>
#include <mutex>
#include <sstream>

#include "fsm/errors.hpp"

namespace fsm {

SubsetMask mask_of(std::span<const int> subset) {
  SubsetMask mask = 0;
  for (int e : subset) {
    if (e < 0 || e >= kMaxFunctionalArity) throw DomainError("subset element out of range");
    mask |= SubsetMask{1} << e;
  }
  return mask;
}

std::vector<int> elements_of(SubsetMask mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

SubsetTable::SubsetTable(int k) : k_(k) {
  if (k < 1 || k > kMaxFunctionalArity) {
    throw SizeGuardError("functional arity " + std::to_string(k) + " outside [1, " +
                         std::to_string(kMaxFunctionalArity) + "]");
  }
  values_.assign(std::size_t{1} << k, Rational(0));
}

Rational SubsetTable::product(const Partition& p) const {
  if (p.size() != k_) {
    throw DimensionError("partition of size " + std::to_string(p.size()) + " against arity " + std::to_string(k_));
  }
  Rational result = 1;
  for (const auto& b : p.blocks()) {
    result *= values_[mask_of(b)];
    if (result == 0) break;
  }
  return result;
}

CumulantFunctional CumulantFunctional::from_sequence(int k, std::span<const Rational> sequence) {
  CumulantFunctional r(k);
  for (SubsetMask mask = 1; mask <= r.full_mask(); ++mask) {
    const auto n = static_cast<std::size_t>(std::popcount(mask));
    r[mask] = n <= sequence.size() ? sequence[n - 1] : Rational(0);
  }
  return r;
}

void CumulantFunctional::declare_freeness(std::vector<int> families) {
  if (static_cast<int>(families.size()) != arity()) {
    throw DimensionError("freeness structure must label every position");
  }
  families_ = std::move(families);
}

namespace {

void check_arity(const SubsetTable& table, const std::optional<Partition>& p) {
  if (p && p->size() != table.arity()) {
    throw DimensionError("partition of size " + std::to_string(p->size()) + " against functional arity " +
                         std::to_string(table.arity()));
  }
}

// μ_NC(σ, 1̂_n) for every σ ∈ NC(n), aligned with noncrossing_partitions(n).
const std::vector<Rational>& mobius_to_top(int n) {
  static std::array<std::once_flag, kMaxNoncrossingEnumeration + 1> flags;
  static std::array<std::vector<Rational>, kMaxNoncrossingEnumeration + 1> cache;
  std::call_once(flags.at(n), [n] {
    const auto top = Partition::coarsest(n);
    for (const auto& s : noncrossing_partitions(n)) cache[n].push_back(mobius(s, top, Lattice::Noncrossing));
  });
  return cache[n];
}

// Value of Σ_{σ ∈ NC(|B|)} weight(σ) ∏_{V ∈ σ} table[B|_V] for the subset B.
template <class Weight>
Rational sum_over_nc_of_subset(const SubsetTable& table, SubsetMask subset, Weight&& weight) {
  const auto elements = elements_of(subset);
  const int n = static_cast<int>(elements.size());
  const auto& lattice = noncrossing_partitions(n);
  Rational total = 0;
  for (std::size_t idx = 0; idx < lattice.size(); ++idx) {
    const Rational w = weight(idx);
    if (w == 0) continue;
    Rational term = w;
    for (const auto& block : lattice[idx].blocks()) {
      SubsetMask mask = 0;
      for (int e : block) mask |= SubsetMask{1} << elements[e];
      term *= table[mask];
      if (term == 0) break;
    }
    total += term;
  }
  return total;
}

}  // namespace

Rational moments_from_cumulants(const CumulantFunctional& r, const std::optional<Partition>& p) {
  check_arity(r, p);
  const Partition upper = p.value_or(Partition::coarsest(r.arity()));
  Rational total = 0;
  for (const auto& s : noncrossing_partitions(r.arity())) {
    if (refines(s, upper)) total += r.product(s);
  }
  return total;
}

Rational cumulants_from_moments(const MomentFunctional& m, const std::optional<Partition>& p) {
  check_arity(m, p);
  const Partition upper = p.value_or(Partition::coarsest(m.arity()));
  if (!is_noncrossing(upper)) throw DomainError("cumulants_from_moments: " + upper.to_string() + " is crossing");
  Rational total = 0;
  for (const auto& s : noncrossing_partitions(m.arity())) {
    if (refines(s, upper)) total += mobius(s, upper, Lattice::Noncrossing) * m.product(s);
  }
  return total;
}

MomentFunctional moment_table(const CumulantFunctional& r) {
  MomentFunctional m(r.arity());
  for (SubsetMask mask = 1; mask <= r.full_mask(); ++mask) {
    m[mask] = sum_over_nc_of_subset(r, mask, [](std::size_t) { return Rational(1); });
  }
  return m;
}

CumulantFunctional cumulant_table(const MomentFunctional& m) {
  CumulantFunctional r(m.arity());
  for (SubsetMask mask = 1; mask <= m.full_mask(); ++mask) {
    const auto& mu = mobius_to_top(std::popcount(mask));
    r[mask] = sum_over_nc_of_subset(m, mask, [&](std::size_t idx) { return mu[idx]; });
  }
  return r;
}

bool mixed_cumulant_vanishing_check(const CumulantFunctional& r) {
  const auto& families = r.freeness();
  if (!families) return true;
  for (SubsetMask mask = 1; mask <= r.full_mask(); ++mask) {
    const auto elements = elements_of(mask);
    bool mixed = false;
    for (int e : elements) mixed = mixed || (*families)[e] != (*families)[elements.front()];
    if (mixed && r[mask] != 0) return false;
  }
  return true;
}

nlohmann::json to_json(const SubsetTable& table) {
  nlohmann::json values = nlohmann::json::object();
  for (SubsetMask mask = 1; mask <= table.full_mask(); ++mask) {
    if (table[mask] == 0) continue;
    std::string key;
    for (int e : elements_of(mask)) {
      if (!key.empty()) key += ',';
      key += std::to_string(e + 1);
    }
    values[key] = to_string(table[mask]);
  }
  return {{"k", table.arity()}, {"values", values}};
}

namespace {

Rational rational_value(const nlohmann::json& v) {
  return parse_rational(v.is_string() ? v.get<std::string>() : v.dump());
}

template <class Table>
Table table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("k") || !j.contains("values")) {
    throw ParseError("functional JSON needs \"k\" and \"values\"");
  }
  Table table(j.at("k").get<int>());
  for (const auto& [key, value] : j.at("values").items()) {
    std::vector<int> subset;
    std::stringstream ss(key);
    std::string token;
    while (std::getline(ss, token, ',')) {
      int e = 0;
      try {
        e = std::stoi(token);
      } catch (const std::exception&) {
        throw ParseError("bad subset key '" + key + "'");
      }
      if (e < 1 || e > table.arity()) throw ParseError("subset key '" + key + "' outside [1, k]");
      if (!subset.empty() && e - 1 <= subset.back()) throw ParseError("subset key '" + key + "' must be increasing");
      subset.push_back(e - 1);
    }
    if (subset.empty()) throw ParseError("empty subset key");
    table[mask_of(subset)] = rational_value(value);
  }
  return table;
}

}  // namespace

CumulantFunctional cumulants_from_json(const nlohmann::json& j) {
  auto r = table_from_json<CumulantFunctional>(j);
  if (j.contains("freeness")) {
    auto families = j.at("freeness").get<std::vector<int>>();
    r.declare_freeness(std::move(families));
  }
  return r;
}

MomentFunctional moments_from_json(const nlohmann::json& j) { return table_from_json<MomentFunctional>(j); }

}  // namespace fsm
