// SPDX-License-Identifier: Apache-2.0
#pragma once

// Distribution-free upper bounds on the generalization error of the two
// Gibbs constructions, the lautum/mutual ratio that sharpens the
// joint-training bound, and rate sweeps over (m, n) grids.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metagibbs/errors.hpp"
#include "metagibbs/info_measures.hpp"
#include "metagibbs/mean_estimation.hpp"
#include "metagibbs/meta_gibbs.hpp"
#include "metagibbs/super_task.hpp"

namespace metagibbs {

/// Evidence for one bound check: the generalization value, the bound, and
/// their slack, plus the named scalars that went into the bound.
struct BoundReport {
  double gen_value = 0.0;
  double bound_value = 0.0;
  double slack = 0.0;  // bound_value - gen_value
  std::map<std::string, double> ingredients;
};

/// Sub-Gaussian parameter certified through boundedness: (hi - lo) / 2.
inline double sub_gaussian_sigma_for_bounded(double lo, double hi) {
  if (hi < lo) throw Error("invalid loss range");
  return 0.5 * (hi - lo);
}

/// The lautum/mutual ratio of the meta joint. Any C below this value
/// satisfies the hypothesis of the ratio-sharpened bound.
inline double c_meta(const MetaInstance& inst, const MetaJoint& j) {
  const JointDist dist = meta_joint_dist(inst, j);
  const double mi = mutual_info(dist, "hypothesis", "dataset");
  if (mi <= 1e-15)
    throw ZeroMutualInformation("mutual information is " + std::to_string(mi) +
                                "; the lautum/mutual ratio is undefined");
  return lautum_info(dist, "hypothesis", "dataset") / mi;
}

/// Joint-training rate bound: 2 sigma^2 gamma / ((1 + C) m n).
inline double thm3_bound(double sigma_meta, double c_meta_value, double gamma, int m, int n) {
  if (!(sigma_meta > 0.0) || !(gamma > 0.0) || m < 1 || n < 1 || c_meta_value < 0.0)
    throw Error("rate bound requires sigma, gamma, m, n positive and C >= 0");
  return 2.0 * sigma_meta * sigma_meta * gamma /
         ((1.0 + c_meta_value) * static_cast<double>(m) * n);
}

/// Square-root mutual-information bound sqrt(2 sigma^2 I(U,W;D) / (m n)).
inline double sqrt_mi_bound(const MetaInstance& inst, const MetaJoint& j,
                                      double sigma_meta) {
  const JointDist dist = meta_joint_dist(inst, j);
  const double mi = mutual_info(dist, "hypothesis", "dataset");
  return std::sqrt(2.0 * sigma_meta * sigma_meta * mi /
                   (static_cast<double>(inst.env.m) * inst.env.n));
}

/// Super-task bound gamma/m + gamma/n for losses in [0,1].
inline double thm4_bound(double gamma, int m, int n) {
  if (!(gamma > 0.0) || m < 1 || n < 1) throw Error("bound requires gamma > 0 and m, n >= 1");
  return gamma / m + gamma / n;
}

/// Check the joint-training rate bound on an enumerable instance with
/// bounded loss, using the exact lautum/mutual ratio.
inline BoundReport check_thm3(const MetaInstance& inst, double cap = kDefaultStateCap) {
  double lo = inst.loss[0], hi = inst.loss[0];
  for (double l : inst.loss) {
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  const MetaJoint j = build_meta_joint(inst, cap);
  const double sigma = sub_gaussian_sigma_for_bounded(lo, hi);
  const JointDist dist = meta_joint_dist(inst, j);
  const double mi = mutual_info(dist, "hypothesis", "dataset");
  const double lautum = lautum_info(dist, "hypothesis", "dataset");
  if (mi <= 1e-15)
    throw ZeroMutualInformation("mutual information is " + std::to_string(mi) +
                                "; the lautum/mutual ratio is undefined");
  const double ratio = lautum / mi;
  BoundReport r;
  r.gen_value = gen_error_direct(inst, j);
  r.bound_value = thm3_bound(sigma, ratio, inst.gamma, inst.env.m, inst.env.n);
  r.slack = r.bound_value - r.gen_value;
  r.ingredients = {{"sigma_meta", sigma},
                   {"c_meta", ratio},
                   {"gamma", inst.gamma},
                   {"m", static_cast<double>(inst.env.m)},
                   {"n", static_cast<double>(inst.env.n)},
                   {"mutual_info", mi},
                   {"lautum_info", lautum},
                   {"loss_lo", lo},
                   {"loss_hi", hi}};
  return r;
}

/// Check the super-task bound on an enumerable instance with loss in [0,1].
inline BoundReport check_thm4(const SuperInstance& inst, double cap = kDefaultStateCap) {
  if (inst.loss_min < 0.0 || inst.loss_max > 1.0)
    throw LossRangeViolation("the super-task bound requires loss values in [0,1]");
  const Theorem2Terms t = theorem2_terms(inst, cap);
  BoundReport r;
  r.gen_value = t.gen_direct;
  r.bound_value = thm4_bound(inst.gamma, inst.m, inst.n);
  r.slack = r.bound_value - r.gen_value;
  r.ingredients = {{"gamma", inst.gamma},
                   {"m", static_cast<double>(inst.m)},
                   {"n", static_cast<double>(inst.n)},
                   {"loss_lo", inst.loss_min},
                   {"loss_hi", inst.loss_max}};
  return r;
}

/// One row of a rate sweep.
struct RateSweepRow {
  int m = 0;
  int n = 0;
  double gen = 0.0;
  double iskl = 0.0;
  std::optional<double> gen_mc;
  std::optional<double> gen_mc_stderr;
  std::optional<double> bound_thm3;
  std::optional<double> bound_thm4;
  std::optional<double> slack;
};

/// Ordinary least squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("slope fit needs >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

/// Log-log slope of the closed-form generalization error against n at
/// fixed m. Exactly -1 for the mean-estimation family.
inline double mean_est_slope_vs_n(const MeanEstConfig& base, std::span<const int> ns) {
  std::vector<double> lx, ly;
  for (int n : ns) {
    MeanEstConfig c = base;
    c.n = n;
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(gen_closed_form(c)));
  }
  return ols_slope(lx, ly);
}

/// The 1/(m n) component isolated by subtracting the m -> infinity
/// asymptote 2 alpha^2 d sigma_z^2 / n from the closed form.
inline double mean_est_mn_component(const MeanEstConfig& cfg) {
  const double asym =
      2.0 * cfg.alpha * cfg.alpha * cfg.d * cfg.sigma_z * cfg.sigma_z / cfg.n;
  return gen_closed_form(cfg) - asym;
}

}  // namespace metagibbs
