// SPDX-License-Identifier: Apache-2.0
#pragma once

// Gaussian distributions, the Gaussian KL closed form, and the linear
// Gaussian channel Y = A X + N. For the channel, the symmetrized KL
// information equals tr(Sigma_N^{-1} A Sigma A^T) for any zero-mean input
// with covariance Sigma; the mutual/lautum split additionally needs the
// output to be Gaussian.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "metagibbs/errors.hpp"

namespace metagibbs {

inline constexpr double kSymTol = 1e-12;
inline constexpr double kPsdTol = -1e-12;

/// Mean/covariance pair. Covariance must be symmetric PSD.
struct GaussianDist {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianDist(Eigen::VectorXd mean_in, Eigen::MatrixXd cov_in)
      : mean(std::move(mean_in)), cov(std::move(cov_in)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
      throw ShapeMismatch("gaussian: mean/covariance dimensions disagree");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymTol)
      throw InvalidDistribution("gaussian: covariance not symmetric within 1e-12");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdTol)
      throw InvalidDistribution("gaussian: covariance has eigenvalue " +
                                std::to_string(es.eigenvalues().minCoeff()) + " below -1e-12");
  }

  Eigen::Index dim() const { return mean.size(); }
};

/// Linear channel Y = A X + N with input covariance Sigma and noise
/// covariance Sigma_N (positive definite). input_gaussian enables the
/// closed-form D(P_Y || P_N) needed for the mutual/lautum split.
struct GaussianChannel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd input_cov;
  Eigen::MatrixXd noise_cov;
  bool input_gaussian = true;

  GaussianChannel(Eigen::MatrixXd A_in, Eigen::MatrixXd input_cov_in, Eigen::MatrixXd noise_cov_in,
                  bool input_gaussian_in = true)
      : A(std::move(A_in)),
        input_cov(std::move(input_cov_in)),
        noise_cov(std::move(noise_cov_in)),
        input_gaussian(input_gaussian_in) {
    if (input_cov.rows() != input_cov.cols() || noise_cov.rows() != noise_cov.cols() ||
        A.cols() != input_cov.rows() || A.rows() != noise_cov.rows())
      throw ShapeMismatch("gaussian channel: dimension mismatch between A, Sigma, Sigma_N");
  }

  /// 2-norm condition number of the noise covariance.
  double noise_condition_number() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(noise_cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
  }
};

namespace detail {

/// log det of a positive definite matrix via Cholesky; throws on failure.
inline double log_det_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularCovariance(std::string(what) + ": matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace detail

/// D(p || q) for Gaussians in nats:
///   0.5 [ tr(Sq^-1 Sp) + (mq-mp)^T Sq^-1 (mq-mp) - d + ln det Sq - ln det Sp ].
inline double gaussian_kl(const GaussianDist& p, const GaussianDist& q) {
  if (p.dim() != q.dim()) throw ShapeMismatch("gaussian_kl: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt_q(q.cov);
  if (llt_q.info() != Eigen::Success)
    throw SingularCovariance("gaussian_kl: second covariance is singular");
  const double logdet_p = detail::log_det_pd(p.cov, "gaussian_kl: first covariance");
  const double logdet_q = 2.0 * llt_q.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const Eigen::VectorXd dm = q.mean - p.mean;
  const double trace = llt_q.solve(p.cov).trace();
  const double quad = dm.dot(llt_q.solve(dm));
  const double d = static_cast<double>(p.dim());
  return 0.5 * (trace + quad - d + logdet_q - logdet_p);
}

struct ChannelInfo {
  std::optional<double> mutual;  // nats; present only when the input is Gaussian
  std::optional<double> lautum;  // nats; present only when the input is Gaussian
  double iskl;                   // nats; distribution-free given the covariance
};

/// Information measures of the linear Gaussian channel:
///   I = 0.5 tr(Sn^-1 A S A^T) - D(P_Y || P_N)
///   L = 0.5 tr(Sn^-1 A S A^T) + D(P_Y || P_N)
///   I_SKL = tr(Sn^-1 A S A^T)
inline ChannelInfo gaussian_channel_info(const GaussianChannel& ch) {
  Eigen::LLT<Eigen::MatrixXd> llt_n(ch.noise_cov);
  if (llt_n.info() != Eigen::Success)
    throw SingularCovariance("gaussian_channel_info: noise covariance is singular");
  const Eigen::MatrixXd asat = ch.A * ch.input_cov * ch.A.transpose();
  const double half_trace = 0.5 * llt_n.solve(asat).trace();
  ChannelInfo out{std::nullopt, std::nullopt, 2.0 * half_trace};
  if (ch.input_gaussian) {
    const Eigen::Index dy = ch.noise_cov.rows();
    const GaussianDist py(Eigen::VectorXd::Zero(dy), asat + ch.noise_cov);
    const GaussianDist pn(Eigen::VectorXd::Zero(dy), ch.noise_cov);
    const double div = gaussian_kl(py, pn);
    out.mutual = half_trace - div;
    out.lautum = half_trace + div;
  }
  return out;
}

}  // namespace metagibbs
