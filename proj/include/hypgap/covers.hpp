#pragma once

// Random permutation covers and operators of the form sum a_g (x) rho(g),
// where rho is either the action of the free group on functions on [n]
// through a cover, restricted to zero-mean functions, or the right regular
// representation compressed to a ball of reduced words.

#include "hypgap/geometry.hpp"
#include "hypgap/norm_estimate.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypgap {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed of trial t derived from a base seed; independent of trial order.
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) {
  return base ^ splitmix64(trial);
}

/// 64-bit Mersenne twister seeded through splitmix64, with an unbiased
/// bounded draw so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal by Box-Muller.
  double normal() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 engine_;
};

using Permutation = std::vector<std::uint32_t>;

inline bool is_permutation_of_range(const Permutation& p) {
  std::vector<char> seen(p.size(), 0);
  for (auto v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

inline Permutation inverse_permutation(const Permutation& p) {
  Permutation inv(p.size());
  for (std::uint32_t i = 0; i < p.size(); ++i) inv[p[i]] = i;
  return inv;
}

struct CoverSample {
  int n = 1;
  std::vector<Permutation> perms;
  std::uint64_t seed = 0;

  int rank() const { return static_cast<int>(perms.size()); }
};

inline Permutation random_permutation(int n, Rng& rng) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0u);
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return p;
}

/// d independent uniform permutations of [n] by Fisher-Yates.
inline CoverSample sample_cover(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("sample_cover: need n >= 1 and d >= 1");
  CoverSample c;
  c.n = n;
  c.seed = seed;
  Rng rng(seed);
  for (int i = 0; i < d; ++i) c.perms.push_back(random_permutation(n, rng));
  return c;
}

/// True when the group generated by the permutations acts with one orbit.
inline bool is_transitive(const CoverSample& cover) {
  const int n = cover.n;
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> queue{0};
  seen[0] = 1;
  std::vector<Permutation> inverses;
  for (const auto& p : cover.perms) inverses.push_back(inverse_permutation(p));
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto v = queue[head];
    for (std::size_t k = 0; k < cover.perms.size(); ++k) {
      for (auto w : {cover.perms[k][v], inverses[k][v]}) {
        if (!seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
      }
    }
  }
  return static_cast<int>(queue.size()) == n;
}

/// (std(sigma) v)[i] = v[sigma(i)], followed by re-centring.
inline Eigen::VectorXd std_apply(const Permutation& sigma, const Eigen::VectorXd& v) {
  if (static_cast<Eigen::Index>(sigma.size()) != v.size())
    throw std::invalid_argument("std_apply: permutation and vector sizes differ");
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if (v.size() > 0 && std::abs(v.mean()) > 1e-12 * scale)
    throw std::invalid_argument("std_apply: input does not have zero mean");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = v(sigma[i]);
  if (out.size() > 0) out.array() -= out.mean();
  return out;
}

/// Index map pi of a word: rho(g) v = v o pi with pi = s_k o ... o s_1 for
/// g = l_1 ... l_k, where s_j is the permutation of letter l_j (inverse for
/// negative letters). This makes rho a homomorphism.
inline Permutation word_index_map(const CoverSample& cover, const Word& word) {
  Permutation pi(cover.n);
  std::iota(pi.begin(), pi.end(), 0u);
  std::vector<Permutation> inverses;
  for (const auto& p : cover.perms) inverses.push_back(inverse_permutation(p));
  for (int letter : word) {
    const int k = std::abs(letter) - 1;
    if (k < 0 || k >= cover.rank()) throw std::out_of_range("word letter outside cover rank");
    const Permutation& s = letter > 0 ? cover.perms[k] : inverses[k];
    for (auto& v : pi) v = s[v];
  }
  return pi;
}

/// Finitely supported map g -> a_g with square blocks of a common size.
template <class Block = Eigen::MatrixXd>
struct CoefficientAssignment {
  std::vector<GroupElement> support;
  std::vector<Block> blocks;

  Eigen::Index dim() const { return blocks.empty() ? 0 : blocks.front().rows(); }

  void validate() const {
    if (support.size() != blocks.size())
      throw std::invalid_argument("coefficient support and blocks differ in length");
    std::set<Word> seen;
    for (const auto& g : support)
      if (!seen.insert(reduce_word(g.word)).second)
        throw std::invalid_argument("coefficient support has a repeated element " + word_to_string(g.word));
    for (const auto& b : blocks)
      if (b.rows() != dim() || b.cols() != dim())
        throw std::invalid_argument("coefficient blocks must share one square size");
  }
};

/// Which representation matrix multiplies a_g.
enum class CoverConvention {
  /// sum a_g (x) rho(g^{-1})
  InverseElement,
  /// sum a_g (x) rho(g)
  Element,
};

/// sum a_g (x) rho_phi(g) (or g^{-1}) on M x n arrays with zero row means,
/// applied block by block without forming the Mn x Mn matrix.
template <class Block = Eigen::MatrixXd>
class CoverOperator {
 public:
  CoverOperator(const CoefficientAssignment<Block>& coeffs, const CoverSample& cover,
                CoverConvention conv = CoverConvention::InverseElement)
      : coeffs_(&coeffs), n_(cover.n) {
    coeffs.validate();
    maps_.reserve(coeffs.support.size());
    for (const auto& g : coeffs.support) {
      const Word w = conv == CoverConvention::InverseElement ? inverse_word(g.word) : g.word;
      maps_.push_back(word_index_map(cover, w));
    }
  }

  Eigen::Index rows() const { return coeffs_->dim(); }
  int n() const { return n_; }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const { return run(X, false); }
  Eigen::MatrixXd apply_adjoint(const Eigen::MatrixXd& X) const { return run(X, true); }

 private:
  Eigen::MatrixXd run(const Eigen::MatrixXd& X, bool adjoint) const {
    if (X.rows() != rows() || X.cols() != n_)
      throw std::invalid_argument("cover operator: expected an " + std::to_string(rows()) + " x " +
                                  std::to_string(n_) + " array");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    Eigen::MatrixXd gathered(X.rows(), X.cols());
    for (std::size_t k = 0; k < maps_.size(); ++k) {
      const Permutation& pi = maps_[k];
      if (!adjoint) {
        for (int j = 0; j < n_; ++j) gathered.col(j) = X.col(pi[j]);
        out.noalias() += coeffs_->blocks[k] * gathered;
      } else {
        // transpose of v -> v o pi is v -> v o pi^{-1}
        for (int j = 0; j < n_; ++j) gathered.col(pi[j]) = X.col(j);
        out.noalias() += coeffs_->blocks[k].transpose() * gathered;
      }
    }
    if (n_ > 0) out.colwise() -= out.rowwise().mean();
    return out;
  }

  const CoefficientAssignment<Block>* coeffs_;
  int n_;
  std::vector<Permutation> maps_;
};

template <class Block>
Eigen::MatrixXd cover_operator_matvec(const CoefficientAssignment<Block>& coeffs, const CoverSample& cover,
                                      const Eigen::MatrixXd& X,
                                      CoverConvention conv = CoverConvention::InverseElement) {
  return CoverOperator<Block>(coeffs, cover, conv).apply(X);
}

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct PowerOptions {
  double tol = 1e-10;
  int max_iters = 5000;
  std::uint64_t seed = 1;
  /// Optional start vector; a seeded Gaussian vector otherwise.
  Eigen::VectorXd start;
  /// Optional projection onto the subspace the norm is taken on.
  LinearMap project;
  bool check_adjoint = true;
};

/// ||A|| by power iteration on A*A. The value sqrt(theta) is the square root
/// of a Rayleigh quotient and hence a lower bound; residual is
/// ||A*A x - theta x|| / theta.
inline NormEstimate operator_norm(const LinearMap& A, const LinearMap& At, Eigen::Index in_dim,
                                  Eigen::Index out_dim, const PowerOptions& opts = {}) {
  NormEstimate est;
  est.method = NormMethod::PowerIteration;
  est.semantics = NormSemantics::LowerBoundUpToResidual;
  if (in_dim == 0 || out_dim == 0) return est;

  Rng rng(opts.seed);
  auto random_vector = [&rng](Eigen::Index size) {
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.normal();
    return v;
  };
  auto project = [&opts](Eigen::VectorXd v) { return opts.project ? opts.project(v) : v; };

  if (opts.check_adjoint) {
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd x = project(random_vector(in_dim));
      const Eigen::VectorXd y = project(random_vector(out_dim));
      const Eigen::VectorXd Ax = A(x);
      const Eigen::VectorXd Aty = At(y);
      const double lhs = Ax.dot(y), rhs = x.dot(Aty);
      const double scale = std::max({1.0, Ax.norm() * y.norm(), x.norm() * Aty.norm()});
      if (std::abs(lhs - rhs) > 1e-8 * scale)
        throw std::invalid_argument("operator_norm: adjoint handle inconsistent with operator");
    }
  }

  Eigen::VectorXd x = opts.start.size() == in_dim ? Eigen::VectorXd(opts.start) : random_vector(in_dim);
  x = project(x);
  if (x.norm() == 0.0) return est;
  x.normalize();
  double theta = 0.0;
  est.converged = false;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::VectorXd y = project(At(A(x)));
    theta = x.dot(y);
    est.iterations = it;
    if (theta <= 0.0) {
      est.residual = 0.0;
      est.converged = true;
      theta = 0.0;
      break;
    }
    est.residual = (y - theta * x).norm() / theta;
    if (est.residual < opts.tol) {
      est.converged = true;
      break;
    }
    x = y / y.norm();
  }
  est.value = std::sqrt(std::max(theta, 0.0));
  return est;
}

/// Projection of an M x n array (flattened column-major) onto zero row means.
inline LinearMap zero_row_mean_projector(Eigen::Index M, Eigen::Index n) {
  return [M, n](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    Eigen::Map<Eigen::MatrixXd> X(out.data(), M, n);
    X.colwise() -= X.rowwise().mean();
    return out;
  };
}

/// Norm of a cover operator on the zero-mean subspace.
template <class Block>
NormEstimate cover_operator_norm(const CoverOperator<Block>& op, PowerOptions opts = {}) {
  const Eigen::Index M = op.rows();
  const Eigen::Index n = op.n();
  if (n <= 1 || M == 0) {
    NormEstimate est;
    est.method = NormMethod::PowerIteration;
    return est;
  }
  auto wrap = [M, n](const CoverOperator<Block>& o, bool adj) -> LinearMap {
    return [&o, adj, M, n](const Eigen::VectorXd& v) {
      const Eigen::Map<const Eigen::MatrixXd> X(v.data(), M, n);
      const Eigen::MatrixXd Y = adj ? o.apply_adjoint(X) : o.apply(X);
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(Y.data(), Y.size()));
    };
  };
  opts.project = zero_row_mean_projector(M, n);
  return operator_norm(wrap(op, false), wrap(op, true), M * n, M * n, opts);
}

/// Default cap on ball size times block size for the compressed regular
/// representation.
inline constexpr std::uint64_t kDefaultBallBudget = 20'000'000;

/// Words of length <= R indexed breadth first with a right-multiplication
/// table: next[w * 2d + letter_slot] is the index of w * letter, or -1 when
/// that product leaves the ball.
class FreeBall {
 public:
  FreeBall(int rank, int radius, std::uint64_t budget_entries = kDefaultBallBudget, Eigen::Index block = 1)
      : rank_(rank), radius_(radius) {
    if (rank < 1 || radius < 0) throw std::invalid_argument("FreeBall: need rank >= 1 and radius >= 0");
    const std::uint64_t size = ball_size(rank, radius);
    if (size >= (1ull << 31)) throw std::length_error("free ball index overflows 32 bits");
    if (size * static_cast<std::uint64_t>(std::max<Eigen::Index>(block, 1)) > budget_entries)
      throw std::length_error("free ball of radius " + std::to_string(radius) + " has " +
                              std::to_string(size) + " words (x block " + std::to_string(block) +
                              "), over the budget of " + std::to_string(budget_entries) + " entries");
    const int slots = 2 * rank;
    next_.assign(size * slots, -1);
    last_.assign(size, 0);
    length_.assign(size, 0);
    std::int64_t count = 1;
    std::size_t layer_begin = 0, layer_end = 1;
    for (int l = 1; l <= radius; ++l) {
      for (std::size_t w = layer_begin; w < layer_end; ++w) {
        for (int s = 0; s < slots; ++s) {
          const int letter = slot_letter(s);
          if (last_[w] == -letter) continue;
          const std::int64_t child = count++;
          last_[child] = letter;
          length_[child] = l;
          next_[w * slots + s] = static_cast<std::int32_t>(child);
          // the child times the inverse letter returns to w
          next_[child * slots + letter_slot(-letter)] = static_cast<std::int32_t>(w);
        }
      }
      layer_begin = layer_end;
      layer_end = static_cast<std::size_t>(count);
    }
  }

  std::int64_t size() const { return static_cast<std::int64_t>(last_.size()); }
  int rank() const { return rank_; }
  int radius() const { return radius_; }

  int letter_slot(int letter) const { return letter < 0 ? -letter - 1 : rank_ + letter - 1; }
  int slot_letter(int slot) const { return slot < rank_ ? -(slot + 1) : slot - rank_ + 1; }

  std::int64_t times_letter(std::int64_t w, int letter) const {
    return next_[w * 2 * rank_ + letter_slot(letter)];
  }

  /// Index of w * g, or -1 if some partial product leaves the ball. Since g
  /// is reduced, once a letter extends the word the rest cannot cancel, so
  /// an exit is final.
  std::int64_t times_word(std::int64_t w, const Word& g) const {
    for (int letter : g) {
      if (w < 0) return -1;
      w = times_letter(w, letter);
    }
    return w;
  }

  /// Index maps of right multiplication by each support element.
  std::vector<std::vector<std::int32_t>> right_maps(const std::vector<GroupElement>& support) const {
    std::vector<std::vector<std::int32_t>> maps;
    for (const auto& g : support) {
      std::vector<std::int32_t> m(size());
      const Word w = reduce_word(g.word);
      for (std::int64_t i = 0; i < size(); ++i) m[i] = static_cast<std::int32_t>(times_word(i, w));
      maps.push_back(std::move(m));
    }
    return maps;
  }

 private:
  int rank_;
  int radius_;
  std::vector<std::int32_t> next_;
  std::vector<int> last_;
  std::vector<int> length_;
};

/// Norm of sum a_g (x) rho_inf(g) compressed to span{delta_w : |w| <= R}:
/// (A F)(w) = sum_g a_g F(w g), products outside the ball dropped. The
/// compression can only lower the norm, so the power-iteration value is a
/// lower bound of the regular-representation norm, nondecreasing in R.
template <class Block>
NormEstimate free_ball_norm(const CoefficientAssignment<Block>& coeffs, int radius, PowerOptions opts = {},
                            std::uint64_t budget_entries = kDefaultBallBudget) {
  coeffs.validate();
  const Eigen::Index M = coeffs.dim();
  NormEstimate est;
  est.method = NormMethod::BallTruncation;
  if (coeffs.support.empty() || M == 0) return est;
  int rank = 1;
  for (const auto& g : coeffs.support)
    for (int l : g.word) rank = std::max(rank, std::abs(l));
  const FreeBall ball(rank, radius, budget_entries, M);
  const auto maps = ball.right_maps(coeffs.support);
  const std::int64_t N = ball.size();

  auto apply = [&](const Eigen::VectorXd& v, bool adjoint) {
    const Eigen::Map<const Eigen::MatrixXd> F(v.data(), M, N);
    Eigen::VectorXd outv = Eigen::VectorXd::Zero(M * N);
    Eigen::Map<Eigen::MatrixXd> out(outv.data(), M, N);
    for (std::size_t k = 0; k < maps.size(); ++k) {
      const auto& m = maps[k];
      const auto& a = coeffs.blocks[k];
      if (M == 1) {
        const double c = a.coeff(0, 0);
        for (std::int64_t w = 0; w < N; ++w) {
          const std::int64_t u = m[w];
          if (u < 0) continue;
          if (!adjoint)
            out(0, w) += c * F(0, u);
          else
            out(0, u) += c * F(0, w);
        }
      } else {
        for (std::int64_t w = 0; w < N; ++w) {
          const std::int64_t u = m[w];
          if (u < 0) continue;
          if (!adjoint)
            out.col(w).noalias() += a * F.col(u);
          else
            out.col(u).noalias() += a.transpose() * F.col(w);
        }
      }
    }
    return outv;
  };

  if (opts.start.size() != M * N) {
    // delta at the identity word times a seeded unit vector; for scalar
    // coefficients this start is radial and the iteration stays radial.
    Rng rng(opts.seed);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(M * N);
    for (Eigen::Index i = 0; i < M; ++i) start(i) = M == 1 ? 1.0 : rng.normal();
    opts.start = std::move(start);
  }
  est = operator_norm([&](const Eigen::VectorXd& v) { return apply(v, false); },
                      [&](const Eigen::VectorXd& v) { return apply(v, true); }, M * N, M * N, opts);
  est.method = NormMethod::BallTruncation;
  return est;
}

/// Scalar coefficient 1 on every generator and inverse of a rank-d group.
inline CoefficientAssignment<Eigen::MatrixXd> scalar_generator_coefficients(const DomainSpec& spec) {
  CoefficientAssignment<Eigen::MatrixXd> c;
  for (int letter : alphabet(spec.rank())) {
    c.support.push_back(word_to_element({letter}, spec));
    c.blocks.push_back(Eigen::MatrixXd::Ones(1, 1));
  }
  return c;
}

/// Limit of values v(R) ~ v_inf - c / (R + 2)^2 from two radii, the
/// asymptotics of the truncated-tree top eigenvalue.
inline double extrapolate_ball_norms(int r1, double v1, int r2, double v2) {
  const double x1 = 1.0 / ((r1 + 2.0) * (r1 + 2.0));
  const double x2 = 1.0 / ((r2 + 2.0) * (r2 + 2.0));
  return (v2 * x1 - v1 * x2) / (x1 - x2);
}

struct BcRow {
  int n = 0;
  int trial = 0;
  double norm = 0.0;
  double free_ref = 0.0;
  bool within_eps = false;
};

struct BcSummary {
  int n = 0;
  double fraction_within = 0.0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double median_excess = 0.0;
};

struct BcTable {
  std::vector<BcRow> rows;
  std::vector<BcSummary> summary;
};

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

/// For each n, sample covers and compare cover-operator norms on the
/// zero-mean subspace against free_ref + eps.
template <class Block>
BcTable bc_experiment(const CoefficientAssignment<Block>& coeffs, const std::vector<int>& n_list, int trials,
                      double eps, double free_ref, std::uint64_t base_seed, PowerOptions power = {}) {
  if (trials < 1) throw std::invalid_argument("bc_experiment: trials must be >= 1");
  int rank = 1;
  for (const auto& g : coeffs.support)
    for (int l : g.word) rank = std::max(rank, std::abs(l));
  BcTable table;
  for (int n : n_list) {
    std::vector<double> norms;
    int within = 0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t seed = trial_seed(base_seed ^ static_cast<std::uint64_t>(n), t);
      const CoverSample cover = sample_cover(n, rank, seed);
      PowerOptions p = power;
      p.seed = seed;
      const double norm = cover_operator_norm(CoverOperator<Block>(coeffs, cover), p).value;
      const bool ok = norm <= free_ref + eps;
      within += ok;
      norms.push_back(norm);
      table.rows.push_back({n, t, norm, free_ref, ok});
    }
    BcSummary s;
    s.n = n;
    s.fraction_within = static_cast<double>(within) / trials;
    s.median = quantile(norms, 0.5);
    s.q10 = quantile(norms, 0.1);
    s.q90 = quantile(norms, 0.9);
    s.median_excess = s.median - free_ref;
    table.summary.push_back(s);
  }
  return table;
}

}  // namespace hypgap
