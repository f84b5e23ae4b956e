#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "actowl/core/errors.hpp"
#include "actowl/core/sufficient_stats.hpp"
#include "actowl/core/types.hpp"

namespace actowl {

namespace detail {

/// log of the rising factorial x (x+1) ... (x+n-1); integer n keeps this free of lgamma.
inline double log_rising(double x, long n) {
  double s = 0.0;
  for (long t = 0; t < n; ++t) s += std::log(x + static_cast<double>(t));
  return s;
}

inline double log_factorial(long n) { return log_rising(1.0, n); }

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

/// Normal-inverse-Wishart posterior over (mu_k, Sigma_k) for one component.
struct NiwPosterior {
  Vec2 mean;
  double kappa;
  double nu;
  Mat2 scale;  ///< V_n
};

inline NiwPosterior niw_posterior(const Hyperparameters& h, const PositionStats& s) {
  NiwPosterior p;
  p.kappa = h.kappa0 + s.count;
  p.nu = h.nu0 + s.count;
  p.mean = (h.kappa0 * h.m0 + s.sum) / p.kappa;
  p.scale = h.V0 + s.sum_outer + h.kappa0 * h.m0 * h.m0.transpose() - p.kappa * p.mean * p.mean.transpose();
  p.scale = 0.5 * (p.scale + p.scale.transpose());
  return p;
}

/// Parameters of the bivariate Student-t posterior predictive.
struct StudentT2 {
  Vec2 location;
  Mat2 scale;
  double dof;
};

inline StudentT2 position_predictive(const Hyperparameters& h, const PositionStats& s) {
  const auto post = niw_posterior(h, s);
  constexpr double d = Hyperparameters::kPositionDim;
  StudentT2 t;
  t.location = post.mean;
  t.dof = post.nu - d + 1.0;
  t.scale = post.scale * (post.kappa + 1.0) / (post.kappa * t.dof);
  return t;
}

/// log density of the collapsed NIW predictive for component k at x.
inline double position_predictive_logdensity(const SufficientStats& stats, const Hyperparameters& h, std::size_t k,
                                             const Vec2& x) {
  if (k >= stats.components()) throw InputError("position component out of range");
  if (!x.allFinite()) throw InputError("position must be finite");
  const auto t = position_predictive(h, stats.position(k));

  Eigen::LLT<Mat2> llt(t.scale);
  if (llt.info() != Eigen::Success) {
    llt.compute(t.scale + 1e-9 * Mat2::Identity());
    if (llt.info() != Eigen::Success)
      throw NumericalError("predictive scale matrix is not positive definite (duplicate collinear points?)");
  }
  const Mat2 L = llt.matrixL();
  const double half_log_det = std::log(L(0, 0)) + std::log(L(1, 1));
  const Vec2 z = llt.matrixL().solve(x - t.location);
  const double mahalanobis = z.squaredNorm();
  // In two dimensions Gamma((v+2)/2) / Gamma(v/2) = v/2, which cancels against v*pi down to 1/(2 pi).
  return -std::log(2.0 * std::numbers::pi) - half_log_det - 0.5 * (t.dof + 2.0) * std::log1p(mahalanobis / t.dof);
}

/// log Dirichlet-multinomial probability of the count vector o under concept l.
/// Includes the multinomial coefficient, which is the same for every l.
inline double attribute_predictive_loglik(const SufficientStats& stats, const Hyperparameters& h, std::size_t l,
                                          const AttributeVector& o) {
  if (l >= stats.concepts()) throw InputError("concept index out of range");
  if (o.dim() != stats.attribute_dim()) throw InputError("attribute vector has the wrong dimension");
  long m = 0;
  double log_coef = 0.0;
  double log_num = 0.0;
  for (std::size_t d = 0; d < o.dim(); ++d) {
    const int c = o.values[d];
    if (c < 0) throw InputError("attribute counts must be non-negative");
    if (c == 0) continue;
    m += c;
    log_coef -= detail::log_factorial(c);
    log_num += detail::log_rising(static_cast<double>(stats.attribute_count(l, d)) + h.alpha, c);
  }
  if (m == 0) return 0.0;
  log_coef += detail::log_factorial(m);
  const double a_total =
      static_cast<double>(stats.attribute_total(l)) + static_cast<double>(stats.attribute_dim()) * h.alpha;
  return log_coef + log_num - detail::log_rising(a_total, m);
}

/// Posterior predictive over the answer vocabulary for concept l.
inline std::vector<double> answer_predictive(const SufficientStats& stats, const Hyperparameters& h, std::size_t l) {
  if (l >= stats.concepts()) throw InputError("concept index out of range");
  const std::size_t V = stats.answer_vocab();
  const double denom = static_cast<double>(stats.answer_total(l)) + static_cast<double>(V) * h.beta;
  std::vector<double> p(V);
  for (std::size_t v = 0; v < V; ++v) p[v] = (static_cast<double>(stats.answer_count(l, v)) + h.beta) / denom;
  return p;
}

/// Normalized probabilities over (C, i) pairs, row-major by concept, plus the
/// log of the normalizer (the incremental particle weight).
struct AssignmentTable {
  std::size_t concepts = 0;
  std::size_t components = 0;
  std::vector<double> prob;
  double log_marginal = 0.0;

  double at(std::size_t l, std::size_t k) const { return prob.at(l * components + k); }

  std::vector<double> concept_marginal() const {
    std::vector<double> m(concepts, 0.0);
    for (std::size_t l = 0; l < concepts; ++l)
      for (std::size_t k = 0; k < components; ++k) m[l] += prob[l * components + k];
    return m;
  }

  Assignment assignment_of(std::size_t flat) const { return {flat / components, flat % components}; }
};

/// Collapsed conditional p(C_n, i_n | past, x_n, o_n, w_n) with each modality's
/// likelihood raised to its weight. `answer` is the vocabulary index of w_n, or
/// nullopt when the answer is unknown.
inline AssignmentTable assignment_posterior(const SufficientStats& stats, const Hyperparameters& h,
                                            const Observation& obs, std::optional<std::size_t> answer) {
  const std::size_t L = stats.concepts();
  const std::size_t K = stats.components();
  if (obs.fixed_position_component && *obs.fixed_position_component >= K)
    throw InputError("fixed position component out of range");
  if (answer && *answer >= stats.answer_vocab()) throw InputError("answer index out of range");

  const double n_total = static_cast<double>(stats.assigned());
  const double log_concept_norm = std::log(n_total + static_cast<double>(L) * h.gamma);
  const double lambda_k = h.lambda / static_cast<double>(K);

  std::vector<double> log_pos(K, 0.0);
  if (h.w_position != 0.0) {
    for (std::size_t k = 0; k < K; ++k) {
      if (obs.fixed_position_component && *obs.fixed_position_component != k) continue;
      log_pos[k] = h.w_position * position_predictive_logdensity(stats, h, k, obs.position);
    }
  }

  AssignmentTable table;
  table.concepts = L;
  table.components = K;
  table.prob.assign(L * K, -std::numeric_limits<double>::infinity());
  for (std::size_t l = 0; l < L; ++l) {
    const double n_l = static_cast<double>(stats.concept_count(l));
    double log_l = std::log(n_l + h.gamma) - log_concept_norm;
    if (h.w_attribute != 0.0) log_l += h.w_attribute * attribute_predictive_loglik(stats, h, l, obs.attributes);
    if (answer && h.w_answer != 0.0) {
      const double num = static_cast<double>(stats.answer_count(l, *answer)) + h.beta;
      const double den =
          static_cast<double>(stats.answer_total(l)) + static_cast<double>(stats.answer_vocab()) * h.beta;
      log_l += h.w_answer * (std::log(num) - std::log(den));
    }
    const double log_comp_norm = std::log(n_l + h.lambda);
    for (std::size_t k = 0; k < K; ++k) {
      if (obs.fixed_position_component && *obs.fixed_position_component != k) continue;
      const double n_lk = static_cast<double>(stats.concept_component_count(l, k));
      table.prob[l * K + k] = log_l + std::log(n_lk + lambda_k) - log_comp_norm + log_pos[k];
    }
  }

  table.log_marginal = detail::log_sum_exp(table.prob);
  if (!std::isfinite(table.log_marginal)) throw NumericalError("assignment table has no finite mass");
  for (double& v : table.prob) v = std::exp(v - table.log_marginal);
  return table;
}

}  // namespace actowl
