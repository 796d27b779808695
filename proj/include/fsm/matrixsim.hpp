#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fsm/partition.hpp"
#include "fsm/process.hpp"

namespace fsm {

using Matrix = Eigen::MatrixXcd;

enum class MatrixModel { PoissonSps, GaussianIncrements };

std::string to_string(MatrixModel model);
MatrixModel parse_matrix_model(std::string_view text);

struct MatrixEnsembleConfig {
  int dim = 200;
  int trials = 20;
  std::uint64_t seed = 1;
  MatrixModel model = MatrixModel::PoissonSps;

  void validate() const;
};

/// X = left · right when factored (d×r times r×d), otherwise X = left.
struct Increment {
  Matrix left;
  Matrix right;
  bool factored = false;

  Matrix dense() const { return factored ? Matrix(left * right) : left; }
};

/// Sampled increments X^{(c)}(I_j). Components drawn from the same process
/// share a slot, so identical copies reuse one set of matrices.
struct IncrementSet {
  Subdivision subdivision = Subdivision::uniform(1, 1);
  int dim = 0;
  std::vector<int> slot_of;                     // component -> slot
  std::vector<std::vector<Increment>> slots;    // slot -> interval
  std::vector<int> ranks;                       // projection ranks (poisson_sps only)

  int arity() const { return static_cast<int>(slot_of.size()); }
  int intervals() const { return subdivision.size(); }
  const Increment& at(int component, int interval) const { return slots.at(slot_of.at(component)).at(interval); }
  Matrix matrix(int component, int interval) const { return at(component, interval).dense(); }
  /// X^{(c)}([0, t)).
  Matrix total(int component) const;
};

/// Per-trial seed, a splitmix64 step over (master, trial).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

/// Ranks r_j with Σ r_j = dim and |r_j/dim − ℓ_j/t| ≤ 1/dim.
std::vector<int> largest_remainder_ranks(const Subdivision& s, int dim);

/// Hermitian n×n matrix with independent complex Gaussian entries of variance `variance`.
Matrix sample_hermitian_gaussian(int n, double variance, std::mt19937_64& rng);

IncrementSet sample_increments(const ProcessSpec& spec, const Subdivision& s, const MatrixEnsembleConfig& cfg,
                               int trial);

/// tr(A)/d, real part.
double normalized_trace(const Matrix& a);
/// tr(AB)/d without forming AB.
double normalized_trace_product(const Matrix& a, const Matrix& b);

inline constexpr double kMaxBruteForceProducts = 1e7;

/// Σ_{v̄ ∈ [N]^k_{≥p}} X^{(1)}_{v_1} ⋯ X^{(k)}_{v_k}; nested collapse when p is noncrossing.
Matrix pr_matrix(const Partition& p, const IncrementSet& inc);
/// Σ_{σ ≥ p} μ(p, σ) pr_matrix(σ).
Matrix st_matrix(const Partition& p, const IncrementSet& inc);

/// Component g, interval i ↦ ∏_{c ∈ groups[g]} X^{(c)}(I_i).
IncrementSet derived_increments(const IncrementSet& inc, const std::vector<std::vector<int>>& groups);

struct Estimate {
  double mean = 0;
  double std_error = 0;
  double median = 0;
  std::vector<double> samples;
};
Estimate summarize(std::vector<double> samples);

/// One line of a sweep table.
struct SweepRow {
  std::string label;
  int dim = 0;
  int n = 0;
  int trials = 0;
  double estimate = 0;
  double std_error = 0;
  double reference = 0;
  bool pass = false;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const SweepRow& row);
std::string sweep_csv_header();
std::string to_csv(const SweepRow& row);

/// Mean normalized traces of X([0,t))^n and, when N ≥ 2, of words in X(I_1), X(I_2),
/// against the exact engine. Pass: |estimate − reference| ≤ max(3 stderr, 1e−3).
std::vector<SweepRow> calibrate(const ProcessSpec& spec, const Subdivision& s, const MatrixEnsembleConfig& cfg,
                                int max_order = 4);

/// ‖L − R‖_F / ‖L‖_F per trial for L = St_π and R = ∏ R(C_i; X) ψ_o(Δ(B_1), ..., Δ(B_o)).
Estimate main_theorem_matrix_residual(const Partition& p, const ProcessSpec& spec, const MatrixEnsembleConfig& cfg,
                                      const Subdivision& s);

struct DimMesh {
  int dim;
  int n;
};

/// Residual along uniform subdivisions of [0, 1). Row i passes when its median is
/// below the previous one; the last row must also stay below `final_threshold`.
std::vector<SweepRow> main_theorem_matrix_sweep(const Partition& p, const ProcessSpec& spec,
                                                const MatrixEnsembleConfig& cfg, const std::vector<DimMesh>& points,
                                                double final_threshold = 0.2);

enum class ZModel {
  CenteredGaussian,  // every Z_{i,j} centered
  ShiftedGaussian,   // Z_{i,1} centered, the others shifted by the identity
  Identity,          // no centered factor; rejected
};

/// ‖Σ_i p_i Z_{i,1} p_i ⋯ Z_{i,k} p_i‖ (largest singular value) per subdivision, in the
/// given order. Row i > 0 passes when the median decreases, the mean does not grow by
/// more than 2 combined standard errors and the mean sits below δ^{1/2k}(4c)^k.
std::vector<SweepRow> lem_proj_decay(const MatrixEnsembleConfig& cfg, const std::vector<Subdivision>& meshes, int k,
                                     ZModel z = ZModel::CenteredGaussian);

/// ‖Σ_i X_i Z X_i − τ_d(Z) Σ_i X_i²‖_F / sqrt(d) with X free Poisson in the s·p·s model and
/// Z = G + I/2, G an independent Hermitian Gaussian.
Estimate sandwich_matrix_residual(const MatrixEnsembleConfig& cfg, const Subdivision& s);

}  // namespace fsm
