#include "fsm/matrixsim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "fsm/errors.hpp"

namespace fsm {

std::string to_string(MatrixModel model) {
  return model == MatrixModel::PoissonSps ? "poisson_sps" : "gaussian_increments";
}

MatrixModel parse_matrix_model(std::string_view text) {
  if (text == "poisson_sps") return MatrixModel::PoissonSps;
  if (text == "gaussian_increments") return MatrixModel::GaussianIncrements;
  throw ParseError("unknown matrix model '" + std::string(text) + "'");
}

void MatrixEnsembleConfig::validate() const {
  if (dim < 2) throw DomainError("matrix ensemble: dim must be at least 2");
  if (trials < 1) throw DomainError("matrix ensemble: trials must be at least 1");
}

Matrix IncrementSet::total(int component) const {
  Matrix sum = Matrix::Zero(dim, dim);
  for (int j = 0; j < intervals(); ++j) {
    const auto& x = at(component, j);
    if (x.factored) {
      sum.noalias() += x.left * x.right;
    } else {
      sum += x.left;
    }
  }
  return sum;
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> largest_remainder_ranks(const Subdivision& s, int dim) {
  const int n = s.size();
  std::vector<int> ranks(n);
  std::vector<std::pair<Rational, int>> remainders;
  int used = 0;
  for (int j = 0; j < n; ++j) {
    const Rational quota = s.length(j) / s.total() * dim;
    const Integer whole = numerator(quota) / denominator(quota);
    ranks[j] = whole.convert_to<int>();
    used += ranks[j];
    remainders.emplace_back(quota - Rational(whole), j);
  }
  // Largest fractional part first, ties to the lower index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < dim - used; ++i) ++ranks[remainders[i].second];
  return ranks;
}

Matrix sample_hermitian_gaussian(int n, double variance, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double diag = std::sqrt(variance);
  const double off = std::sqrt(variance / 2);
  Matrix h(n, n);
  for (int a = 0; a < n; ++a) {
    h(a, a) = diag * normal(rng);
    for (int b = a + 1; b < n; ++b) {
      const double re = normal(rng);
      const double im = normal(rng);
      h(a, b) = {off * re, off * im};
      h(b, a) = {off * re, -off * im};
    }
  }
  return h;
}

namespace {

struct SlotModel {
  std::vector<int> slot_of;
  std::vector<int> representative;  // slot -> component
};

// Components with equal covariance share a slot; components with zero mixed
// second cumulant get independent slots. Anything else has no matrix model here.
SlotModel slot_structure(const ProcessSpec& spec) {
  SlotModel m;
  for (int c = 0; c < spec.arity(); ++c) {
    const Rational cc = spec.cumulant(std::vector<int>{c, c});
    int found = -1;
    for (std::size_t slot = 0; slot < m.representative.size() && found < 0; ++slot) {
      const int e = m.representative[slot];
      const Rational ce = spec.cumulant(std::vector<int>{c, e});
      const Rational ee = spec.cumulant(std::vector<int>{e, e});
      if (ce == 0) continue;
      if (ce == ee && cc == ee) {
        found = static_cast<int>(slot);
      } else {
        throw DomainError("matrix model: components " + std::to_string(e) + " and " + std::to_string(c) +
                          " are neither identical nor free");
      }
    }
    if (found < 0) {
      found = static_cast<int>(m.representative.size());
      m.representative.push_back(c);
    }
    m.slot_of.push_back(found);
  }
  return m;
}

Rational single_cumulant(const ProcessSpec& spec, int component, int order) {
  return spec.cumulant(std::vector<int>(order, component));
}

}  // namespace

IncrementSet sample_increments(const ProcessSpec& spec, const Subdivision& s, const MatrixEnsembleConfig& cfg,
                               int trial) {
  cfg.validate();
  const auto slots = slot_structure(spec);
  const int d = cfg.dim;
  const int n = s.size();

  std::vector<Rational> scale;  // rate for poisson_sps, variance for gaussian_increments
  for (int rep : slots.representative) {
    if (cfg.model == MatrixModel::PoissonSps) {
      const Rational rate = single_cumulant(spec, rep, 1);
      for (int m = 2; m <= 6; ++m) {
        if (single_cumulant(spec, rep, m) != rate) {
          throw DomainError("poisson_sps needs a free Poisson process");
        }
      }
      if (rate * s.total() != 1) throw DomainError("poisson_sps needs rate · t = 1");
      scale.push_back(rate);
    } else {
      const Rational variance = single_cumulant(spec, rep, 2);
      if (variance <= 0 || single_cumulant(spec, rep, 1) != 0) {
        throw DomainError("gaussian_increments needs a semicircular process");
      }
      for (int m = 3; m <= 6; ++m) {
        if (single_cumulant(spec, rep, m) != 0) throw DomainError("gaussian_increments needs a semicircular process");
      }
      scale.push_back(variance);
    }
  }

  std::mt19937_64 rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
  IncrementSet inc;
  inc.subdivision = s;
  inc.dim = d;
  inc.slot_of = slots.slot_of;

  if (cfg.model == MatrixModel::PoissonSps) {
    inc.ranks = largest_remainder_ranks(s, d);
    for (std::size_t slot = 0; slot < slots.representative.size(); ++slot) {
      const Matrix sc = sample_hermitian_gaussian(d, 1.0 / d, rng);
      std::vector<Increment> row;
      int offset = 0;
      for (int j = 0; j < n; ++j) {
        // s p_j s = (s p_j)(p_j s), p_j the diagonal projection onto the next ranks[j] coordinates
        const int r = inc.ranks[j];
        Increment x;
        x.factored = true;
        x.left = sc.middleCols(offset, r);
        x.right = x.left.adjoint();
        row.push_back(std::move(x));
        offset += r;
      }
      inc.slots.push_back(std::move(row));
    }
  } else {
    for (std::size_t slot = 0; slot < slots.representative.size(); ++slot) {
      const double variance = scale[slot].convert_to<double>();
      std::vector<Increment> row;
      for (int j = 0; j < n; ++j) {
        Increment x;
        x.left = sample_hermitian_gaussian(d, variance * s.length(j).convert_to<double>() / d, rng);
        row.push_back(std::move(x));
      }
      inc.slots.push_back(std::move(row));
    }
  }
  return inc;
}

double normalized_trace(const Matrix& a) { return a.trace().real() / static_cast<double>(a.rows()); }

double normalized_trace_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum().real() / static_cast<double>(a.rows());
}

namespace {

// Right-multiplies a running product by an increment, keeping low-rank factors small.
void multiply_by(Matrix& m, const Increment& x) {
  if (x.factored) {
    Matrix tmp = m * x.left;
    m.noalias() = tmp * x.right;
  } else {
    m = m * x.left;
  }
}

class Collapse {
 public:
  Collapse(const Partition& p, const IncrementSet& inc) : p_(p), inc_(inc) {}

  // Sum over indices constant on the blocks inside [lo, hi); nullopt stands for the identity.
  std::optional<Matrix> eval(int lo, int hi) const {
    if (lo >= hi) return std::nullopt;
    const auto& block = p_.block(p_.block_of(lo));
    std::vector<std::optional<Matrix>> gaps;
    for (std::size_t e = 1; e < block.size(); ++e) gaps.push_back(eval(block[e - 1] + 1, block[e]));

    const int d = inc_.dim;
    Matrix chain = Matrix::Zero(d, d);
    for (int j = 0; j < inc_.intervals(); ++j) {
      const auto& first = inc_.at(block[0], j);
      Matrix m = first.factored ? first.right : first.left;
      for (std::size_t e = 1; e < block.size(); ++e) {
        if (gaps[e - 1]) m = m * *gaps[e - 1];
        multiply_by(m, inc_.at(block[e], j));
      }
      if (first.factored) {
        chain.noalias() += first.left * m;
      } else {
        chain += m;
      }
    }
    auto rest = eval(block.back() + 1, hi);
    if (rest) return Matrix(chain * *rest);
    return chain;
  }

 private:
  const Partition& p_;
  const IncrementSet& inc_;
};

Matrix pr_brute_force(const Partition& p, const IncrementSet& inc) {
  const int k = p.size();
  const double products = std::pow(static_cast<double>(inc.intervals()), p.block_count()) * k;
  if (products > kMaxBruteForceProducts) {
    throw SizeGuardError("pr_matrix: N^|p|·k exceeds " + std::to_string(static_cast<long>(kMaxBruteForceProducts)));
  }
  std::vector<std::vector<Matrix>> dense(k);
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < inc.intervals(); ++j) dense[c].push_back(inc.matrix(c, j));
  }
  Matrix sum = Matrix::Zero(inc.dim, inc.dim);
  for_each_index(p, inc.intervals(), IndexSet::AtLeast, [&](std::span<const int> v) {
    Matrix term = dense[0][v[0]];
    for (int i = 1; i < k; ++i) term = term * dense[i][v[i]];
    sum += term;
  });
  return sum;
}

void check_arity(const Partition& p, const IncrementSet& inc) {
  if (p.size() != inc.arity()) {
    throw DimensionError("partition of " + std::to_string(p.size()) + " points against " +
                         std::to_string(inc.arity()) + " components");
  }
}

}  // namespace

Matrix pr_matrix(const Partition& p, const IncrementSet& inc) {
  check_arity(p, inc);
  if (!is_noncrossing(p)) return pr_brute_force(p, inc);
  return *Collapse(p, inc).eval(0, p.size());
}

Matrix st_matrix(const Partition& p, const IncrementSet& inc) {
  check_arity(p, inc);
  Matrix sum = Matrix::Zero(inc.dim, inc.dim);
  for (const auto& sigma : set_partitions(p.size())) {
    if (!refines(p, sigma)) continue;
    const Rational mu = mobius(p, sigma, Lattice::Full);
    if (mu == 0) continue;
    sum += mu.convert_to<double>() * pr_matrix(sigma, inc);
  }
  return sum;
}

IncrementSet derived_increments(const IncrementSet& inc, const std::vector<std::vector<int>>& groups) {
  IncrementSet out;
  out.subdivision = inc.subdivision;
  out.dim = inc.dim;
  out.ranks = inc.ranks;
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("derived increments: empty group");
    out.slot_of.push_back(static_cast<int>(out.slots.size()));
    std::vector<Increment> row;
    for (int j = 0; j < inc.intervals(); ++j) {
      bool all_factored = true;
      for (int c : g) all_factored = all_factored && inc.at(c, j).factored;
      Increment x;
      if (all_factored) {
        // U_1 (V_1 U_2) ⋯ (V_{m-1} U_m) V_m
        const auto& first = inc.at(g[0], j);
        Matrix core = Matrix::Identity(first.left.cols(), first.left.cols());
        for (std::size_t e = 1; e < g.size(); ++e) {
          core = core * (inc.at(g[e - 1], j).right * inc.at(g[e], j).left);
        }
        x.factored = true;
        x.left = first.left * core;
        x.right = inc.at(g.back(), j).right;
      } else {
        x.left = inc.matrix(g[0], j);
        for (std::size_t e = 1; e < g.size(); ++e) multiply_by(x.left, inc.at(g[e], j));
      }
      row.push_back(std::move(x));
    }
    out.slots.push_back(std::move(row));
  }
  return out;
}

Estimate summarize(std::vector<double> samples) {
  Estimate e;
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return e;
  e.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / (n - 1) / n);
  }
  auto sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  e.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
  e.samples = std::move(samples);
  return e;
}

nlohmann::json to_json(const SweepRow& row) {
  return {{"label", row.label},       {"d", row.dim},          {"N", row.n},
          {"trial_count", row.trials}, {"estimate", row.estimate}, {"stderr", row.std_error},
          {"reference", row.reference}, {"pass", row.pass},      {"seed", row.seed}};
}

std::string sweep_csv_header() { return "label,d,N,trial_count,estimate,stderr,reference,pass,seed"; }

std::string to_csv(const SweepRow& row) {
  std::ostringstream out;
  out.precision(10);
  out << '"' << row.label << "\"," << row.dim << ',' << row.n << ',' << row.trials << ',' << row.estimate << ','
      << row.std_error << ',' << row.reference << ',' << (row.pass ? "true" : "false") << ',' << row.seed;
  return out.str();
}

std::vector<SweepRow> calibrate(const ProcessSpec& spec, const Subdivision& s, const MatrixEnsembleConfig& cfg,
                                int max_order) {
  if (max_order < 1 || max_order > 4) throw DomainError("calibrate: max_order must lie in [1, 4]");
  const auto x = spec.arity() == 1 ? spec : spec.select({0});

  // Letter 0 is X([0,t)); letters 1, 2 are X(I_1), X(I_2).
  struct Word {
    std::string label;
    std::vector<int> letters;
  };
  std::vector<Word> words;
  for (int n = 1; n <= max_order; ++n) words.push_back({"X(t)^" + std::to_string(n), std::vector<int>(n, 0)});
  if (s.size() >= 2) {
    for (int n = 2; n <= max_order; ++n) {
      for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> w;
        std::string label;
        for (int i = 0; i < n; ++i) {
          w.push_back(1 + (mask >> i & 1));
          label += (i ? " " : "") + std::string("X(I") + std::to_string(w.back()) + ")";
        }
        words.push_back({label, w});
      }
    }
  }

  auto interval_of = [&](int letter) {
    return letter == 0 ? Interval{0, s.total()} : s.interval(letter - 1);
  };

  std::vector<std::vector<double>> samples(words.size());
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const auto inc = sample_increments(x, s, cfg, trial);
    std::vector<Matrix> letter{inc.total(0)};
    if (s.size() >= 2) {
      letter.push_back(inc.matrix(0, 0));
      letter.push_back(inc.matrix(0, 1));
    }
    std::map<std::pair<int, int>, Matrix> pairs;
    auto pair = [&](int a, int b) -> const Matrix& {
      auto it = pairs.find({a, b});
      if (it == pairs.end()) it = pairs.emplace(std::make_pair(a, b), letter[a] * letter[b]).first;
      return it->second;
    };
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& l = words[w].letters;
      double value = 0;
      switch (l.size()) {
        case 1: value = normalized_trace(letter[l[0]]); break;
        case 2: value = normalized_trace_product(letter[l[0]], letter[l[1]]); break;
        case 3: value = normalized_trace_product(pair(l[0], l[1]), letter[l[2]]); break;
        default: value = normalized_trace_product(pair(l[0], l[1]), pair(l[2], l[3])); break;
      }
      samples[w].push_back(value);
    }
  }

  std::vector<SweepRow> rows;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& l = words[w].letters;
    std::vector<Interval> intervals;
    for (int letter : l) intervals.push_back(interval_of(letter));
    const auto tuple = x.select(std::vector<int>(l.size(), 0));
    const double reference = increment_moment(tuple, intervals).convert_to<double>();
    const auto e = summarize(samples[w]);
    SweepRow row;
    row.label = words[w].label;
    row.dim = cfg.dim;
    row.n = s.size();
    row.trials = cfg.trials;
    row.estimate = e.mean;
    row.std_error = e.std_error;
    row.reference = reference;
    row.pass = std::abs(e.mean - reference) <= std::max(3 * e.std_error, 1e-3);
    row.seed = cfg.seed;
    rows.push_back(row);
  }
  return rows;
}

Estimate main_theorem_matrix_residual(const Partition& p, const ProcessSpec& spec, const MatrixEnsembleConfig& cfg,
                                      const Subdivision& s) {
  if (!is_noncrossing(p)) throw DomainError("main theorem needs a noncrossing partition, got " + p.to_string());
  if (cfg.model != MatrixModel::PoissonSps) throw DomainError("main theorem residual runs on the poisson_sps model");
  const int k = p.size();
  const auto x = spec.arity() == k ? spec : make_identical_copies(spec.arity() == 1 ? spec : spec.select({0}), k);
  const auto split = classify_classes(p);
  Rational c = 1;
  for (const auto& inner : split.inner) c *= s.total() * x.cumulant(inner);
  const double scalar = c.convert_to<double>();
  const auto psi = Partition::finest(split.outer_count());

  std::vector<double> residuals;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const auto inc = sample_increments(x, s, cfg, trial);
    const Matrix lhs = st_matrix(p, inc);
    const Matrix rhs = scalar * st_matrix(psi, derived_increments(inc, split.outer));
    const double norm = lhs.norm();
    const double diff = (lhs - rhs).norm();
    residuals.push_back(norm > 0 ? diff / norm : diff / std::sqrt(static_cast<double>(cfg.dim)));
  }
  return summarize(std::move(residuals));
}

std::vector<SweepRow> main_theorem_matrix_sweep(const Partition& p, const ProcessSpec& spec,
                                                const MatrixEnsembleConfig& cfg, const std::vector<DimMesh>& points,
                                                double final_threshold) {
  std::vector<SweepRow> rows;
  double previous = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto point_cfg = cfg;
    point_cfg.dim = points[i].dim;
    const auto e = main_theorem_matrix_residual(p, spec, point_cfg, Subdivision::uniform(1, points[i].n));
    SweepRow row;
    row.label = "main-theorem " + p.to_string();
    row.dim = points[i].dim;
    row.n = points[i].n;
    row.trials = cfg.trials;
    row.estimate = e.median;
    row.std_error = e.std_error;
    row.reference = 0;
    row.pass = i == 0 || e.median < previous;
    if (i + 1 == points.size()) row.pass = row.pass && e.median < final_threshold;
    row.seed = cfg.seed;
    previous = e.median;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> lem_proj_decay(const MatrixEnsembleConfig& cfg, const std::vector<Subdivision>& meshes, int k,
                                     ZModel z) {
  cfg.validate();
  if (k < 1) throw DomainError("lem_proj_decay: k must be positive");
  if (z == ZModel::Identity) throw DomainError("lem_proj_decay: no Z_{i,j} is centered");
  const int d = cfg.dim;
  const double shift = z == ZModel::ShiftedGaussian && k > 1 ? 1.0 : 0.0;
  // ‖Z‖ < c/16, with the semicircle edge 2 padded by 5%.
  const double c = 16 * (2.1 + shift);

  std::vector<SweepRow> rows;
  Estimate previous;
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    const auto& s = meshes[m];
    const auto ranks = largest_remainder_ranks(s, d);
    std::vector<double> norms;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      std::mt19937_64 rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
      double largest = 0;
      for (int r : ranks) {
        if (r == 0) continue;
        // p_i Z p_i only sees the r×r diagonal block of Z.
        Matrix prod = sample_hermitian_gaussian(r, 1.0 / d, rng);
        for (int j = 1; j < k; ++j) {
          Matrix next = sample_hermitian_gaussian(r, 1.0 / d, rng);
          next.diagonal().array() += shift;
          prod = prod * next;
        }
        // largest singular value through the spectrum of A*A
        const Matrix gram = k == 1 ? Matrix(prod * prod) : Matrix(prod.adjoint() * prod);
        const double norm = std::sqrt(
            std::max(0.0, Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()));
        largest = std::max(largest, norm);
      }
      norms.push_back(largest);
    }
    const auto e = summarize(std::move(norms));
    const double bound = std::pow(s.mesh().convert_to<double>(), 1.0 / (2 * k)) * std::pow(4 * c, k);
    SweepRow row;
    row.label = "proj-decay k=" + std::to_string(k);
    row.dim = d;
    row.n = s.size();
    row.trials = cfg.trials;
    row.estimate = e.median;
    row.std_error = e.std_error;
    row.reference = bound;
    row.pass = e.mean <= bound;
    if (m > 0) {
      const double band = 2 * std::hypot(e.std_error, previous.std_error);
      row.pass = row.pass && e.median < previous.median && e.mean <= previous.mean + band;
    }
    row.seed = cfg.seed;
    rows.push_back(row);
    previous = e;
  }
  return rows;
}

Estimate sandwich_matrix_residual(const MatrixEnsembleConfig& cfg, const Subdivision& s) {
  if (cfg.model != MatrixModel::PoissonSps) throw DomainError("sandwich residual runs on the poisson_sps model");
  const auto x = make_free_poisson(1 / s.total());
  const int d = cfg.dim;
  std::vector<double> residuals;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const auto inc = sample_increments(x, s, cfg, trial);
    std::mt19937_64 rng(trial_seed(~cfg.seed, static_cast<std::uint64_t>(trial)));
    Matrix zm = sample_hermitian_gaussian(d, 1.0 / d, rng);
    zm.diagonal().array() += 0.5;
    const double tau_z = normalized_trace(zm);
    Matrix diff = Matrix::Zero(d, d);
    for (int j = 0; j < inc.intervals(); ++j) {
      const auto& xi = inc.at(0, j);
      // X_i (Z − τ(Z)) X_i with X_i = F F*
      Matrix core = xi.right * zm * xi.left;
      core -= tau_z * (xi.right * xi.left);
      diff.noalias() += xi.left * core * xi.right;
    }
    residuals.push_back(diff.norm() / std::sqrt(static_cast<double>(d)));
  }
  return summarize(std::move(residuals));
}

}  // namespace fsm
