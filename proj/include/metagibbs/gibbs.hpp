// SPDX-License-Identifier: Apache-2.0
#pragma once

// Gibbs posteriors on finite hypothesis spaces, and the Gaussian closed
// form for quadratic energies under an improper flat prior. Everything
// runs in log domain with a max shift: the naive weight ratio overflows
// for moderate gamma * energy.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "metagibbs/discrete.hpp"
#include "metagibbs/errors.hpp"

namespace metagibbs {

/// log sum_i exp(v_i) with max shift; -inf for an all-(-inf) input.
inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v)
    if (x > m) m = x;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// A finite hypothesis space with an energy table f(y, x) indexed by
/// hypothesis y (rows) and data context x (columns).
struct EnergySpec {
  std::vector<std::string> hypotheses;
  std::vector<std::string> contexts;
  Eigen::MatrixXd energy;  // hypotheses x contexts

  EnergySpec(std::vector<std::string> hypotheses_in, std::vector<std::string> contexts_in,
             Eigen::MatrixXd energy_in)
      : hypotheses(std::move(hypotheses_in)),
        contexts(std::move(contexts_in)),
        energy(std::move(energy_in)) {
    if (energy.rows() != static_cast<Eigen::Index>(hypotheses.size()) ||
        energy.cols() != static_cast<Eigen::Index>(contexts.size()))
      throw ShapeMismatch("energy table does not match hypothesis/context counts");
    if (!energy.allFinite()) throw Error("energy table contains NaN or infinity");
  }

  std::size_t context_index(const std::string& x) const {
    for (std::size_t i = 0; i < contexts.size(); ++i)
      if (contexts[i] == x) return i;
    throw Error("unknown context '" + x + "'");
  }
};

namespace detail {

inline void check_gibbs_args(const EnergySpec& spec, const DiscreteDist& prior, double gamma) {
  if (gamma < 0.0) throw NegativeGamma("inverse temperature must be nonnegative");
  if (prior.outcomes() != spec.hypotheses)
    throw PriorSupportMismatch("prior is not indexed by the hypothesis space");
}

/// Log weights log pi(y) - gamma f(y, x); zero-prior hypotheses get -inf.
inline std::vector<double> gibbs_log_weights(const EnergySpec& spec, const DiscreteDist& prior,
                                             double gamma, std::size_t x) {
  std::vector<double> lw(spec.hypotheses.size());
  for (std::size_t y = 0; y < lw.size(); ++y)
    lw[y] = prior.prob(y) > 0.0
                ? std::log(prior.prob(y)) - gamma * spec.energy(static_cast<Eigen::Index>(y),
                                                                static_cast<Eigen::Index>(x))
                : -std::numeric_limits<double>::infinity();
  return lw;
}

}  // namespace detail

/// The Gibbs posterior over hypotheses for context x:
/// probability proportional to pi(y) exp(-gamma f(y,x)).
inline DiscreteDist gibbs_posterior(const EnergySpec& spec, const DiscreteDist& prior,
                                    double gamma, const std::string& x) {
  detail::check_gibbs_args(spec, prior, gamma);
  const auto lw = detail::gibbs_log_weights(spec, prior, gamma, spec.context_index(x));
  const double lz = log_sum_exp(lw);
  std::vector<double> probs(lw.size());
  for (std::size_t y = 0; y < lw.size(); ++y)
    probs[y] = std::isfinite(lw[y]) ? std::exp(lw[y] - lz) : 0.0;
  return DiscreteDist(spec.hypotheses, std::move(probs));
}

/// log V_f(x, gamma) = log sum_y pi(y) exp(-gamma f(y,x)).
inline double log_partition(const EnergySpec& spec, const DiscreteDist& prior, double gamma,
                            const std::string& x) {
  detail::check_gibbs_args(spec, prior, gamma);
  return log_sum_exp(detail::gibbs_log_weights(spec, prior, gamma, spec.context_index(x)));
}

/// Quadratic energy f(w) = 0.5 w^T Q w - b^T w + c.
struct QuadraticEnergy {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  double c = 0.0;
};

struct GaussianGibbsResult {
  Eigen::VectorXd mean;        // Q^-1 b
  Eigen::MatrixXd covariance;  // (gamma Q)^-1
};

/// Gibbs posterior for a quadratic energy under an improper flat prior:
/// Gaussian with precision gamma*Q and mean Q^-1 b. A singular gamma*Q
/// raises SingularPrecision carrying a null-space basis.
inline GaussianGibbsResult gaussian_gibbs(const QuadraticEnergy& energy, double gamma) {
  if (gamma < 0.0) throw NegativeGamma("inverse temperature must be nonnegative");
  const Eigen::Index d = energy.Q.rows();
  if (energy.Q.cols() != d || energy.b.size() != d)
    throw ShapeMismatch("quadratic energy dimensions disagree");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma * energy.Q);
  const double max_ev = es.eigenvalues().cwiseAbs().maxCoeff();
  const double tol = std::max(1e-12, 1e-12 * max_ev);
  if (es.eigenvalues().minCoeff() <= tol) {
    std::vector<std::vector<double>> basis;
    for (Eigen::Index i = 0; i < d; ++i)
      if (es.eigenvalues()(i) <= tol) {
        const Eigen::VectorXd v = es.eigenvectors().col(i);
        basis.emplace_back(v.data(), v.data() + v.size());
      }
    throw SingularPrecision("gamma*Q is singular: the flat-prior posterior is improper",
                            std::move(basis));
  }
  GaussianGibbsResult out;
  out.mean = energy.Q.ldlt().solve(energy.b);
  const Eigen::MatrixXd inv_diag =
      es.eigenvalues().cwiseInverse().asDiagonal();
  out.covariance = es.eigenvectors() * inv_diag * es.eigenvectors().transpose();
  return out;
}

}  // namespace metagibbs
