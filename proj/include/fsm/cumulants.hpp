#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fsm/partition.hpp"
#include "fsm/rational.hpp"

namespace fsm {

/// Bitmask over positions {0..k-1}; bit i set means i ∈ B.
using SubsetMask = std::uint32_t;

inline constexpr int kMaxFunctionalArity = 16;

SubsetMask mask_of(std::span<const int> subset);
std::vector<int> elements_of(SubsetMask mask);

/// Values attached to every nonempty subset of [k], stored densely (2^k slots).
///
/// The entry for B is the functional evaluated on the ordered subword of the
/// underlying k-tuple picked out by B.
class SubsetTable {
 public:
  explicit SubsetTable(int k);

  int arity() const { return k_; }
  const Rational& operator[](SubsetMask mask) const { return values_.at(mask); }
  Rational& operator[](SubsetMask mask) { return values_.at(mask); }
  const Rational& at(std::span<const int> subset) const { return values_.at(mask_of(subset)); }

  /// ∏_{B ∈ π} value(B).
  Rational product(const Partition& p) const;

  SubsetMask full_mask() const { return (SubsetMask{1} << k_) - 1; }

  friend bool operator==(const SubsetTable&, const SubsetTable&) = default;

 private:
  int k_;
  std::vector<Rational> values_;
};

/// Joint moments M(B; A) = φ(∏_{i ∈ B} A_i), product form M_π.
class MomentFunctional : public SubsetTable {
 public:
  using SubsetTable::SubsetTable;
};

/// Joint free cumulants R(B; A), product form R_π, optional freeness structure.
class CumulantFunctional : public SubsetTable {
 public:
  using SubsetTable::SubsetTable;

  /// Same cumulant sequence r_{|B|} on every subset (identical copies of one variable).
  static CumulantFunctional from_sequence(int k, std::span<const Rational> sequence);

  /// families[i] is the free family of position i; mixed cumulants must vanish.
  void declare_freeness(std::vector<int> families);
  const std::optional<std::vector<int>>& freeness() const { return families_; }

 private:
  std::optional<std::vector<int>> families_;
};

/// M_π = Σ_{σ ∈ NC(k), σ ≤ π} R_σ; π defaults to 1̂ (the full moment).
Rational moments_from_cumulants(const CumulantFunctional& r, const std::optional<Partition>& p = std::nullopt);

/// R_π = Σ_{σ ∈ NC(k), σ ≤ π} μ_NC(σ, π) M_σ; π must be noncrossing.
Rational cumulants_from_moments(const MomentFunctional& m, const std::optional<Partition>& p = std::nullopt);

/// Whole-table transforms (every subset B gets its own moment/cumulant).
MomentFunctional moment_table(const CumulantFunctional& r);
CumulantFunctional cumulant_table(const MomentFunctional& m);

/// True iff R(B) = 0 for every B meeting two declared free families.
/// Without a declared structure every position is in one family, so the check is vacuous.
bool mixed_cumulant_vanishing_check(const CumulantFunctional& r);

/// {"k": int, "values": {"1,3": "p/q", ...}}; positions 1-based, zero entries omitted on output.
nlohmann::json to_json(const SubsetTable& table);
CumulantFunctional cumulants_from_json(const nlohmann::json& j);
MomentFunctional moments_from_json(const nlohmann::json& j);

}  // namespace fsm
