// SPDX-License-Identifier: Apache-2.0
#pragma once

// The d-dimensional mean-estimation example in closed form: Gaussian
// posterior of the joint-training Gibbs algorithm under the regularized
// squared loss
//   loss(u, w, z) = alpha |z - w|^2 + (1 - alpha) |u - w|^2,
// its precision structure, the symmetrized-KL closed form, the linear
// channel decomposition behind it, and a seeded Monte Carlo cross-check.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "metagibbs/errors.hpp"
#include "metagibbs/gaussian.hpp"
#include "metagibbs/rng.hpp"

namespace metagibbs {

enum class SampleLaw { Gaussian, ShiftedRademacher };

struct MeanEstConfig {
  int m = 1;             // tasks
  int n = 1;             // samples per task
  int d = 1;             // dimension
  double alpha = 0.5;    // loss mixing weight in [0,1]
  double gamma = 1.0;    // inverse temperature, > 0
  double sigma_z = 1.0;  // per-coordinate sample standard deviation, > 0
  double sigma_tau = 1.0;  // environment standard deviation of task means, >= 0
  SampleLaw sample_law = SampleLaw::Gaussian;

  void validate() const {
    if (m < 1 || n < 1 || d < 1) throw Error("mean estimation requires m, n, d >= 1");
    if (alpha < 0.0 || alpha > 1.0) throw Error("alpha must lie in [0,1]");
    if (!(gamma > 0.0)) throw Error("gamma must be positive");
    if (!(sigma_z > 0.0)) throw Error("sigma_z must be positive");
    if (sigma_tau < 0.0) throw Error("sigma_tau must be nonnegative");
  }

  void require_interior_alpha(const char* what) const {
    if (alpha <= 0.0 || alpha >= 1.0)
      throw DegenerateAlpha(std::string(what) +
                            ": alpha in {0,1} makes the joint posterior improper");
  }
};

/// Gaussian posterior parameters, ordered (W_1..W_m, U) in R^{(m+1)d}.
struct PosteriorParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

namespace detail {

/// The (m+1)d posterior precision: (2 gamma / m) * blocks with I_d on the
/// W diagonal, (alpha-1) I_d on the W-U cross, and m(1-alpha) I_d on U.
/// Off-diagonal W_i-W_j blocks are exactly zero: W_i and W_j are
/// conditionally independent given U.
inline Eigen::MatrixXd posterior_precision(const MeanEstConfig& cfg) {
  const int m = cfg.m, d = cfg.d;
  const double scale = 2.0 * cfg.gamma / m;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero((m + 1) * d, (m + 1) * d);
  for (int i = 0; i < m; ++i) {
    p.block(i * d, i * d, d, d) = scale * Eigen::MatrixXd::Identity(d, d);
    p.block(i * d, m * d, d, d) = scale * (cfg.alpha - 1.0) * Eigen::MatrixXd::Identity(d, d);
    p.block(m * d, i * d, d, d) = scale * (cfg.alpha - 1.0) * Eigen::MatrixXd::Identity(d, d);
  }
  p.block(m * d, m * d, d, d) = scale * m * (1.0 - cfg.alpha) * Eigen::MatrixXd::Identity(d, d);
  return p;
}

}  // namespace detail

/// Posterior mean and precision given the m datasets (each n-by-d).
/// mu_{W_i} = alpha Zbar_i + (1-alpha) Zbar, mu_U = Zbar.
inline PosteriorParams posterior_params(const MeanEstConfig& cfg,
                                        const std::vector<Eigen::MatrixXd>& datasets) {
  cfg.validate();
  cfg.require_interior_alpha("posterior_params");
  if (static_cast<int>(datasets.size()) != cfg.m)
    throw ShapeMismatch("expected one dataset per task");
  for (const auto& ds : datasets)
    if (ds.rows() != cfg.n || ds.cols() != cfg.d)
      throw ShapeMismatch("each dataset must be n-by-d");

  PosteriorParams out;
  out.precision = detail::posterior_precision(cfg);
  out.mean.resize((cfg.m + 1) * cfg.d);
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(cfg.d);
  std::vector<Eigen::VectorXd> task_means(cfg.m);
  for (int i = 0; i < cfg.m; ++i) {
    task_means[i] = datasets[i].colwise().mean().transpose();
    grand += task_means[i];
  }
  grand /= static_cast<double>(cfg.m);
  for (int i = 0; i < cfg.m; ++i)
    out.mean.segment(i * cfg.d, cfg.d) = cfg.alpha * task_means[i] + (1.0 - cfg.alpha) * grand;
  out.mean.segment(cfg.m * cfg.d, cfg.d) = grand;
  return out;
}

/// Closed-form I_SKL(U, W_1..m ; D) = 2 gamma alpha ((m-1) alpha + 1) d sigma_z^2 / (m n).
/// Valid on all of alpha in [0,1]; independent of the sample distribution
/// beyond its covariance.
inline double isk_closed_form(const MeanEstConfig& cfg) {
  cfg.validate();
  return 2.0 * cfg.gamma * cfg.alpha * ((cfg.m - 1) * cfg.alpha + 1.0) * cfg.d *
         cfg.sigma_z * cfg.sigma_z / (static_cast<double>(cfg.m) * cfg.n);
}

/// Closed-form generalization error
///   2 alpha^2 d sigma_z^2 / n + 2 alpha (1-alpha) d sigma_z^2 / (m n),
/// which is the closed-form identity value isk_closed_form / gamma.
inline double gen_closed_form(const MeanEstConfig& cfg) {
  cfg.validate();
  const double s2 = cfg.sigma_z * cfg.sigma_z;
  const double gen = 2.0 * cfg.alpha * cfg.alpha * cfg.d * s2 / cfg.n +
                     2.0 * cfg.alpha * (1.0 - cfg.alpha) * cfg.d * s2 /
                         (static_cast<double>(cfg.m) * cfg.n);
  if (std::abs(gen * cfg.gamma - isk_closed_form(cfg)) > 1e-12 * std::max(1.0, isk_closed_form(cfg)))
    throw Error("closed-form identity gen * gamma = I_SKL violated (internal inconsistency)");
  return gen;
}

/// The linear channel behind the closed form: centered samples map to the
/// noise-free part of (W_1..m, U) through A, with channel noise covariance
/// equal to the posterior covariance.
struct ChannelDecomposition {
  Eigen::MatrixXd A;        // (m+1)d x mnd
  Eigen::MatrixXd AAT;      // (m+1)d x (m+1)d
  Eigen::MatrixXd sigma_n;  // noise covariance = posterior covariance
  double trace_value = 0.0;  // sigma_z^2 tr(Sigma_N^-1 A A^T), nats
};

inline ChannelDecomposition channel_decomposition(const MeanEstConfig& cfg) {
  cfg.validate();
  cfg.require_interior_alpha("channel_decomposition");
  const int m = cfg.m, n = cfg.n, d = cfg.d;
  ChannelDecomposition out;
  out.A = Eigen::MatrixXd::Zero((m + 1) * d, m * n * d);
  const double own = cfg.alpha / n + (1.0 - cfg.alpha) / (m * n);
  const double cross = (1.0 - cfg.alpha) / (m * n);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < n; ++j)
        out.A.block(i * d, (k * n + j) * d, d, d) =
            (k == i ? own : cross) * Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < n; ++j)
      out.A.block(m * d, (k * n + j) * d, d, d) =
          Eigen::MatrixXd::Identity(d, d) / static_cast<double>(m * n);
  out.AAT = out.A * out.A.transpose();

  const Eigen::MatrixXd precision = detail::posterior_precision(cfg);
  out.sigma_n = precision.ldlt().solve(Eigen::MatrixXd::Identity((m + 1) * d, (m + 1) * d));
  out.trace_value = cfg.sigma_z * cfg.sigma_z * (precision * out.AAT).trace();
  return out;
}

struct MonteCarloResult {
  double estimate = 0.0;
  double stderr_value = 0.0;
  std::uint64_t trials = 0;
};

namespace detail {

/// One trial's Rao-Blackwellized generalization gap. The environment
/// average sits outside the identity here, so the population side draws
/// fresh samples from the trial's own task means. The posterior-covariance
/// smoothing terms of the two risks share the same Hessian and cancel
/// exactly, leaving quadratics evaluated at the posterior mean:
///   gap = (alpha/m) sum_i [ d sigma_z^2 + |mu_i - mu_{W_i}|^2
///                           - (1/n) sum_j |z_ij - mu_{W_i}|^2 ].
/// The task-mean contributions cancel in expectation, which is why the
/// result does not depend on sigma_tau.
inline double mc_trial_gap(const MeanEstConfig& cfg, std::uint64_t master_seed,
                           std::uint64_t trial) {
  const int m = cfg.m, n = cfg.n, d = cfg.d;
  SubstreamRng mean_rng(master_seed, trial, StreamRole::TaskMean);
  SubstreamRng noise_rng(master_seed, trial, StreamRole::Noise);

  Eigen::MatrixXd task_means(m, d);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c) task_means(i, c) = cfg.sigma_tau * mean_rng.next_normal();

  // Sample means are sufficient for the posterior mean.
  Eigen::MatrixXd zbar = Eigen::MatrixXd::Zero(m, d);
  std::vector<Eigen::MatrixXd> data(m, Eigen::MatrixXd(n, d));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < d; ++c) {
        const double noise = cfg.sample_law == SampleLaw::Gaussian ? noise_rng.next_normal()
                                                                   : noise_rng.next_sign();
        data[i](j, c) = task_means(i, c) + cfg.sigma_z * noise;
      }
    zbar.row(i) = data[i].colwise().mean();
  }
  const Eigen::RowVectorXd grand = zbar.colwise().mean();

  const double s2 = cfg.sigma_z * cfg.sigma_z;
  double gap = 0.0;
  for (int i = 0; i < m; ++i) {
    const Eigen::RowVectorXd mu_w = cfg.alpha * zbar.row(i) + (1.0 - cfg.alpha) * grand;
    double train = 0.0;
    for (int j = 0; j < n; ++j) train += (data[i].row(j) - mu_w).squaredNorm();
    train /= static_cast<double>(n);
    gap += d * s2 + (task_means.row(i) - mu_w).squaredNorm() - train;
  }
  return cfg.alpha * gap / static_cast<double>(m);
}

/// Fully sampled variant: draws the parameters from the posterior and
/// fresh evaluation samples from the trial's own tasks. Slower and
/// noisier; kept as an independent cross-check of the Rao-Blackwellized
/// path.
inline double mc_trial_gap_sampled(const MeanEstConfig& cfg, std::uint64_t master_seed,
                                   std::uint64_t trial, const Eigen::MatrixXd& cov_chol) {
  const int m = cfg.m, n = cfg.n, d = cfg.d;
  SubstreamRng mean_rng(master_seed, trial, StreamRole::TaskMean);
  SubstreamRng noise_rng(master_seed, trial, StreamRole::Noise);
  SubstreamRng hyp_rng(master_seed, trial, StreamRole::HypothesisDraw);
  SubstreamRng test_rng(master_seed, trial, StreamRole::TestTaskDraw);

  Eigen::MatrixXd task_means(m, d);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < d; ++c) task_means(i, c) = cfg.sigma_tau * mean_rng.next_normal();
  Eigen::MatrixXd zbar = Eigen::MatrixXd::Zero(m, d);
  std::vector<Eigen::MatrixXd> data(m, Eigen::MatrixXd(n, d));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < d; ++c) {
        const double noise = cfg.sample_law == SampleLaw::Gaussian ? noise_rng.next_normal()
                                                                   : noise_rng.next_sign();
        data[i](j, c) = task_means(i, c) + cfg.sigma_z * noise;
      }
    zbar.row(i) = data[i].colwise().mean();
  }
  const Eigen::RowVectorXd grand = zbar.colwise().mean();

  Eigen::VectorXd draw((m + 1) * d);
  for (int k = 0; k < (m + 1) * d; ++k) draw(k) = hyp_rng.next_normal();
  draw = cov_chol * draw;
  for (int i = 0; i < m; ++i)
    draw.segment(i * d, d) +=
        (cfg.alpha * zbar.row(i) + (1.0 - cfg.alpha) * grand).transpose();
  draw.segment(m * d, d) += grand.transpose();
  const Eigen::VectorXd u = draw.segment(m * d, d);

  double emp = 0.0, pop = 0.0;
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd w = draw.segment(i * d, d);
    double train = 0.0;
    for (int j = 0; j < n; ++j) train += (data[i].row(j).transpose() - w).squaredNorm();
    emp += cfg.alpha * train / n + (1.0 - cfg.alpha) * (u - w).squaredNorm();
    // Fresh n-sample dataset from the same task for the population side.
    double fresh = 0.0;
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd z(d);
      for (int c = 0; c < d; ++c) {
        const double noise = cfg.sample_law == SampleLaw::Gaussian ? test_rng.next_normal()
                                                                   : test_rng.next_sign();
        z(c) = task_means(i, c) + cfg.sigma_z * noise;
      }
      fresh += (z - w).squaredNorm();
    }
    pop += cfg.alpha * fresh / n + (1.0 - cfg.alpha) * (u - w).squaredNorm();
  }
  return (pop - emp) / static_cast<double>(m);
}

}  // namespace detail

/// Seeded Monte Carlo estimate of the generalization error. Deterministic
/// in (master_seed, trials) regardless of thread count: trial t always uses
/// substream t and the reduction is fixed-order pairwise.
inline MonteCarloResult gen_monte_carlo(const MeanEstConfig& cfg, std::uint64_t trials,
                                        std::uint64_t master_seed, int threads = 1,
                                        bool rao_blackwell = true) {
  cfg.validate();
  cfg.require_interior_alpha("gen_monte_carlo");
  if (trials < 100) throw Error("gen_monte_carlo requires at least 100 trials");

  Eigen::MatrixXd cov_chol;
  if (!rao_blackwell) {
    const Eigen::MatrixXd precision = detail::posterior_precision(cfg);
    const Eigen::MatrixXd cov =
        precision.ldlt().solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
    cov_chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  }

  std::vector<double> gaps(trials);
  auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t t = lo; t < hi; ++t)
      gaps[t] = rao_blackwell ? detail::mc_trial_gap(cfg, master_seed, t)
                              : detail::mc_trial_gap_sampled(cfg, master_seed, t, cov_chol);
  };
  if (threads <= 1) {
    worker(0, trials);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) {
      const std::uint64_t lo = k * chunk, hi = std::min<std::uint64_t>(trials, lo + chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  MonteCarloResult out;
  out.trials = trials;
  out.estimate = pairwise_sum(gaps) / static_cast<double>(trials);
  std::vector<double> sq(trials);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const double dlt = gaps[t] - out.estimate;
    sq[t] = dlt * dlt;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(trials - 1);
  out.stderr_value = std::sqrt(var / static_cast<double>(trials));
  return out;
}

}  // namespace metagibbs
