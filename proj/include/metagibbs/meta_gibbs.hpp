// SPDX-License-Identifier: Apache-2.0
#pragma once

// The joint-training meta Gibbs algorithm on finite instances: the four
// risk functionals, the exact generalization identity through symmetrized
// KL information, and the lautum-expansion decomposition. Everything here
// is exact enumeration; the only tolerance is floating-point roundoff.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metagibbs/discrete.hpp"
#include "metagibbs/errors.hpp"
#include "metagibbs/gibbs.hpp"
#include "metagibbs/info_measures.hpp"
#include "metagibbs/meta_env.hpp"

namespace metagibbs {

/// A finite meta-learning problem: environment, parameter spaces, a
/// nonnegative loss table, inverse temperature, and a proper prior over
/// (u, w_1..w_m).
struct MetaInstance {
  FiniteEnvironment env;
  std::vector<std::string> u_space;
  std::vector<std::string> w_space;
  std::vector<double> loss;   // loss[(u*|W| + w)*|Z| + z], nonnegative and finite
  double gamma = 1.0;         // >= 0; the identity ops additionally require > 0
  std::vector<double> prior;  // over hypotheses (u, w_1..w_m); see hypothesis_index

  MetaInstance(FiniteEnvironment env_in, std::vector<std::string> u_space_in,
               std::vector<std::string> w_space_in, std::vector<double> loss_in, double gamma_in,
               std::vector<double> prior_in)
      : env(std::move(env_in)),
        u_space(std::move(u_space_in)),
        w_space(std::move(w_space_in)),
        loss(std::move(loss_in)),
        gamma(gamma_in),
        prior(std::move(prior_in)) {
    if (gamma < 0.0) throw NegativeGamma("meta instance requires gamma >= 0");
    if (loss.size() != u_space.size() * w_space.size() * env.z_count())
      throw ShapeMismatch("loss table size does not match |U|*|W|*|Z|");
    for (double l : loss)
      if (!(l >= 0.0) || !std::isfinite(l)) throw Error("loss table must be nonnegative and finite");
    if (prior.size() != hypothesis_count())
      throw ShapeMismatch("prior size does not match |U|*|W|^m");
    double s = 0.0;
    for (double p : prior) {
      if (!(p >= 0.0)) throw InvalidDistribution("prior has negative entries");
      s += p;
    }
    if (std::abs(s - 1.0) > kProbSumTol) throw InvalidDistribution("prior does not sum to 1");
  }

  std::size_t n_u() const { return u_space.size(); }
  std::size_t n_w() const { return w_space.size(); }

  std::size_t hypothesis_count() const {
    std::size_t c = n_u();
    for (int i = 0; i < env.m; ++i) c *= n_w();
    return c;
  }

  /// h = u * |W|^m + sum_i w_i * |W|^(m-1-i); w_1 is the slowest w digit.
  std::size_t hypothesis_index(std::size_t u, std::span<const std::size_t> ws) const {
    std::size_t h = u;
    for (std::size_t w : ws) h = h * n_w() + w;
    return h;
  }

  std::size_t hyp_u(std::size_t h) const {
    std::size_t c = 1;
    for (int i = 0; i < env.m; ++i) c *= n_w();
    return h / c;
  }

  std::size_t hyp_w(std::size_t h, int i) const {
    for (int k = env.m - 1; k > i; --k) h /= n_w();
    return h % n_w();
  }

  std::string hypothesis_label(std::size_t h) const {
    std::string s = u_space[hyp_u(h)];
    for (int i = 0; i < env.m; ++i) s += "|" + w_space[hyp_w(h, i)];
    return s;
  }

  double loss_at(std::size_t u, std::size_t w, std::size_t z) const {
    return loss[(u * n_w() + w) * env.z_count() + z];
  }
};

/// (1/n) sum_j loss(u, w, z_j) for one task's dataset.
inline double individual_empirical_risk(const MetaInstance& inst, std::size_t u, std::size_t w,
                                        std::span<const int> dataset) {
  double s = 0.0;
  for (int z : dataset) s += inst.loss_at(u, w, static_cast<std::size_t>(z));
  return s / static_cast<double>(dataset.size());
}

/// (1/m) sum_i of the per-task empirical risks; data is the m*n row-major array.
inline double joint_empirical_risk(const MetaInstance& inst, std::size_t u,
                                   std::span<const std::size_t> ws, std::span<const int> data) {
  const int m = inst.env.m, n = inst.env.n;
  double s = 0.0;
  for (int i = 0; i < m; ++i)
    s += individual_empirical_risk(inst, u, ws[i], data.subspan(i * n, n));
  return s / static_cast<double>(m);
}

namespace detail {

/// Energies L_E(h, d) for every hypothesis at a fixed dataset.
inline std::vector<double> hypothesis_energies(const MetaInstance& inst,
                                               std::span<const int> data) {
  const int m = inst.env.m, n = inst.env.n;
  // Precompute per-(u, w, task-slot) average losses once; the hypothesis
  // loop then only sums m table lookups.
  const std::size_t nu = inst.n_u(), nw = inst.n_w();
  std::vector<double> slot(nu * nw * m, 0.0);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t w = 0; w < nw; ++w)
      for (int i = 0; i < m; ++i)
        slot[(u * nw + w) * m + i] =
            individual_empirical_risk(inst, u, w, data.subspan(i * n, n));
  std::vector<double> e(inst.hypothesis_count());
  for (std::size_t h = 0; h < e.size(); ++h) {
    const std::size_t u = inst.hyp_u(h);
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += slot[(u * nw + inst.hyp_w(h, i)) * m + i];
    e[h] = s / static_cast<double>(m);
  }
  return e;
}

inline std::vector<double> gibbs_probs(std::span<const double> prior,
                                       std::span<const double> energies, double gamma) {
  std::vector<double> lw(prior.size());
  for (std::size_t h = 0; h < lw.size(); ++h)
    lw[h] = prior[h] > 0.0 ? std::log(prior[h]) - gamma * energies[h]
                           : -std::numeric_limits<double>::infinity();
  const double lz = log_sum_exp(lw);
  std::vector<double> p(lw.size());
  for (std::size_t h = 0; h < p.size(); ++h)
    p[h] = std::isfinite(lw[h]) ? std::exp(lw[h] - lz) : 0.0;
  return p;
}

}  // namespace detail

/// The meta Gibbs posterior over (u, w_1..w_m) for one meta-dataset:
/// probability proportional to prior(h) exp(-gamma L_E(h, data)).
inline DiscreteDist meta_gibbs_posterior(const MetaInstance& inst, std::span<const int> data) {
  const auto e = detail::hypothesis_energies(inst, data);
  auto probs = detail::gibbs_probs(inst.prior, e, inst.gamma);
  std::vector<std::string> labels(probs.size());
  for (std::size_t h = 0; h < labels.size(); ++h) labels[h] = inst.hypothesis_label(h);
  return DiscreteDist(std::move(labels), std::move(probs));
}

/// The fully enumerated joint of (hypothesis, dataset) with the
/// environment folded into the dataset law.
struct MetaJoint {
  std::size_t n_hyp = 0;
  std::size_t n_data = 0;
  std::vector<double> dataset_prob;  // P(D), length n_data
  std::vector<double> posterior;     // posterior[d * n_hyp + h] = P(h | d)
  std::vector<double> hyp_marginal;  // P(H), length n_hyp
  std::vector<double> energies;      // L_E(h, d), same layout as posterior

  double joint_prob(std::size_t d, std::size_t h) const {
    return dataset_prob[d] * posterior[d * n_hyp + h];
  }
};

/// Dataset index: m*n digits base |Z|, data[i*n+j], last sample fastest.
inline std::vector<int> dataset_digits(const MetaInstance& inst, std::size_t d) {
  const int mn = inst.env.m * inst.env.n;
  std::vector<int> out(mn);
  const std::size_t nz = inst.env.z_count();
  for (int k = mn; k-- > 0;) {
    out[k] = static_cast<int>(d % nz);
    d /= nz;
  }
  return out;
}

inline MetaJoint build_meta_joint(const MetaInstance& inst, double cap = kDefaultStateCap) {
  MetaJoint j;
  j.n_hyp = inst.hypothesis_count();
  double states = static_cast<double>(j.n_hyp);
  for (int k = 0; k < inst.env.m * inst.env.n; ++k)
    states *= static_cast<double>(inst.env.z_count());
  if (states > cap)
    throw StateSpaceTooLarge("meta joint needs " + std::to_string(states) +
                                 " states, above the cap of " + std::to_string(cap),
                             states);
  j.n_data = static_cast<std::size_t>(states / static_cast<double>(j.n_hyp) + 0.5);

  const auto block_law = folded_block_law(inst.env);
  std::size_t blocks_per_task = 1;
  for (int k = 0; k < inst.env.n; ++k) blocks_per_task *= inst.env.z_count();

  j.dataset_prob.resize(j.n_data);
  j.posterior.resize(j.n_data * j.n_hyp);
  j.energies.resize(j.n_data * j.n_hyp);
  j.hyp_marginal.assign(j.n_hyp, 0.0);
  for (std::size_t d = 0; d < j.n_data; ++d) {
    const auto digits = dataset_digits(inst, d);
    double pd = 1.0;
    for (int i = 0; i < inst.env.m; ++i) {
      std::size_t b = 0;
      for (int k = 0; k < inst.env.n; ++k)
        b = b * inst.env.z_count() + static_cast<std::size_t>(digits[i * inst.env.n + k]);
      pd *= block_law[b];
    }
    j.dataset_prob[d] = pd;
    const auto e = detail::hypothesis_energies(inst, digits);
    const auto post = detail::gibbs_probs(inst.prior, e, inst.gamma);
    for (std::size_t h = 0; h < j.n_hyp; ++h) {
      j.posterior[d * j.n_hyp + h] = post[h];
      j.energies[d * j.n_hyp + h] = e[h];
      j.hyp_marginal[h] += pd * post[h];
    }
  }
  return j;
}

/// Expected training risk under the coupled joint (Eq.-(7)-style average).
inline double empirical_meta_risk(const MetaInstance& inst, const MetaJoint& j) {
  (void)inst;
  double s = 0.0;
  for (std::size_t d = 0; d < j.n_data; ++d)
    for (std::size_t h = 0; h < j.n_hyp; ++h)
      s += j.joint_prob(d, h) * j.energies[d * j.n_hyp + h];
  return s;
}

namespace detail {

/// Environment-average population risk of one (u, w) pair:
/// sum_t P_tau(t) E_{z ~ P_t}[loss(u, w, z)].
inline std::vector<double> mixture_population_loss(const MetaInstance& inst) {
  const std::size_t nu = inst.n_u(), nw = inst.n_w(), nz = inst.env.z_count();
  std::vector<double> out(nu * nw, 0.0);
  for (std::size_t t = 0; t < inst.env.task_count(); ++t) {
    const double pt = inst.env.task_prior.prob(t);
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t w = 0; w < nw; ++w) {
        double s = 0.0;
        for (std::size_t z = 0; z < nz; ++z) s += inst.env.tasks[t].prob(z) * inst.loss_at(u, w, z);
        out[u * nw + w] += pt * s;
      }
  }
  return out;
}

}  // namespace detail

/// Population meta risk: the trained (U, W_i) pairs evaluated against an
/// independent fresh task from the environment,
///   (1/m) sum_i E_{P_{U,W_i}} [ sum_t P_tau(t) L_P(U, W_i, P_t) ].
/// This is the exact decoupled expectation of the generalization identity;
/// the trained base-learner conditional enters through the joint marginal.
inline double population_meta_risk(const MetaInstance& inst, const MetaJoint& j) {
  const auto lbar = detail::mixture_population_loss(inst);
  const std::size_t nw = inst.n_w();
  double s = 0.0;
  for (std::size_t h = 0; h < j.n_hyp; ++h) {
    if (j.hyp_marginal[h] <= 0.0) continue;
    const std::size_t u = inst.hyp_u(h);
    double per_task = 0.0;
    for (int i = 0; i < inst.env.m; ++i) per_task += lbar[u * nw + inst.hyp_w(h, i)];
    s += j.hyp_marginal[h] * per_task / static_cast<double>(inst.env.m);
  }
  return s;
}

namespace detail {

struct PriorFactors {
  std::vector<double> pu;               // marginal over U
  std::vector<std::vector<double>> pw;  // per-slot marginals over W
};

/// Marginals of the hypothesis prior, plus a check that the prior equals
/// their product within 1e-12. Throws NonFactorizedPrior otherwise.
inline PriorFactors factorized_prior(const MetaInstance& inst) {
  PriorFactors f;
  f.pu.assign(inst.n_u(), 0.0);
  f.pw.assign(inst.env.m, std::vector<double>(inst.n_w(), 0.0));
  for (std::size_t h = 0; h < inst.prior.size(); ++h) {
    f.pu[inst.hyp_u(h)] += inst.prior[h];
    for (int i = 0; i < inst.env.m; ++i) f.pw[i][inst.hyp_w(h, i)] += inst.prior[h];
  }
  for (std::size_t h = 0; h < inst.prior.size(); ++h) {
    double prod = f.pu[inst.hyp_u(h)];
    for (int i = 0; i < inst.env.m; ++i) prod *= f.pw[i][inst.hyp_w(h, i)];
    if (std::abs(prod - inst.prior[h]) > 1e-12)
      throw NonFactorizedPrior("prior does not factorize as pi(u) * prod_i pi(w_i)");
  }
  return f;
}

}  // namespace detail

/// Literal refit reading of the population meta risk: a fresh test task,
/// a fresh test dataset, and the per-task base-learner kernel (inverse
/// temperature gamma/m) applied to that fresh dataset. Kept for comparison:
/// it deviates from the exact identity value by the U-D dependence the
/// trained marginal carries. Requires a factorized prior with identical
/// per-slot W marginals.
inline double population_meta_risk_refit(const MetaInstance& inst, const MetaJoint& j) {
  const auto f = detail::factorized_prior(inst);
  for (int i = 1; i < inst.env.m; ++i)
    for (std::size_t w = 0; w < inst.n_w(); ++w)
      if (std::abs(f.pw[i][w] - f.pw[0][w]) > 1e-12)
        throw NonFactorizedPrior("refit population risk needs identical per-slot W priors");
  const std::size_t nu = inst.n_u(), nw = inst.n_w(), nz = inst.env.z_count();
  std::vector<double> p_u(nu, 0.0);
  for (std::size_t h = 0; h < j.n_hyp; ++h) p_u[inst.hyp_u(h)] += j.hyp_marginal[h];

  std::size_t blocks = 1;
  for (int k = 0; k < inst.env.n; ++k) blocks *= nz;
  double s = 0.0;
  std::vector<int> digits(inst.env.n, 0);
  for (std::size_t u = 0; u < nu; ++u) {
    if (p_u[u] <= 0.0) continue;
    for (std::size_t t = 0; t < inst.env.task_count(); ++t) {
      const double pt = inst.env.task_prior.prob(t);
      std::fill(digits.begin(), digits.end(), 0);
      for (std::size_t b = 0; b < blocks; ++b) {
        double pblock = 1.0;
        for (int k = 0; k < inst.env.n; ++k) pblock *= inst.env.tasks[t].prob(digits[k]);
        // Base-learner kernel on the fresh block at inverse temperature gamma/m.
        std::vector<double> lw(nw);
        for (std::size_t w = 0; w < nw; ++w)
          lw[w] = f.pw[0][w] > 0.0
                      ? std::log(f.pw[0][w]) - (inst.gamma / inst.env.m) *
                                                   individual_empirical_risk(inst, u, w, digits)
                      : -std::numeric_limits<double>::infinity();
        const double lz = log_sum_exp(lw);
        double inner = 0.0;
        for (std::size_t w = 0; w < nw; ++w) {
          if (!std::isfinite(lw[w])) continue;
          double lp = 0.0;
          for (std::size_t z = 0; z < nz; ++z)
            lp += inst.env.tasks[t].prob(z) * inst.loss_at(u, w, z);
          inner += std::exp(lw[w] - lz) * lp;
        }
        s += p_u[u] * pt * pblock * inner;
        for (int k = inst.env.n; k-- > 0;) {
          if (static_cast<std::size_t>(++digits[k]) < nz) break;
          digits[k] = 0;
        }
      }
    }
  }
  return s;
}

/// Maximum total-variation deviation between the posterior conditional
/// P(w_1..w_m | u, data) and the product of the induced per-task kernels.
/// Factorized priors must give a value <= 1e-10.
inline double base_learner_factorization_check(const MetaInstance& inst,
                                               double cap = kDefaultStateCap) {
  const auto f = detail::factorized_prior(inst);
  const MetaJoint j = build_meta_joint(inst, cap);
  const int m = inst.env.m, n = inst.env.n;
  const std::size_t nw = inst.n_w();
  std::size_t w_combos = 1;
  for (int i = 0; i < m; ++i) w_combos *= nw;

  double max_tv = 0.0;
  for (std::size_t d = 0; d < j.n_data; ++d) {
    const auto digits = dataset_digits(inst, d);
    for (std::size_t u = 0; u < inst.n_u(); ++u) {
      double pu_d = 0.0;
      for (std::size_t c = 0; c < w_combos; ++c)
        pu_d += j.posterior[d * j.n_hyp + u * w_combos + c];
      if (pu_d < 1e-14) continue;
      // Per-task kernels at inverse temperature gamma/m.
      std::vector<std::vector<double>> kernels(m);
      for (int i = 0; i < m; ++i) {
        std::vector<double> lw(nw);
        for (std::size_t w = 0; w < nw; ++w)
          lw[w] = f.pw[i][w] > 0.0
                      ? std::log(f.pw[i][w]) -
                            (inst.gamma / m) *
                                individual_empirical_risk(
                                    inst, u, w, std::span<const int>(digits).subspan(i * n, n))
                      : -std::numeric_limits<double>::infinity();
        const double lz = log_sum_exp(lw);
        kernels[i].resize(nw);
        for (std::size_t w = 0; w < nw; ++w)
          kernels[i][w] = std::isfinite(lw[w]) ? std::exp(lw[w] - lz) : 0.0;
      }
      double tv = 0.0;
      for (std::size_t c = 0; c < w_combos; ++c) {
        const double cond = j.posterior[d * j.n_hyp + u * w_combos + c] / pu_d;
        double prod = 1.0;
        std::size_t rem = c;
        for (int i = m - 1; i >= 0; --i) {
          prod *= kernels[i][rem % nw];
          rem /= nw;
        }
        tv += std::abs(cond - prod);
      }
      max_tv = std::max(max_tv, 0.5 * tv);
    }
  }
  return max_tv;
}

/// The (hypothesis, dataset) joint as a 2-axis distribution, for the
/// public information-measure path.
inline JointDist meta_joint_dist(const MetaInstance& inst, const MetaJoint& j) {
  std::vector<std::string> hyp_labels(j.n_hyp), data_labels(j.n_data);
  for (std::size_t h = 0; h < j.n_hyp; ++h) hyp_labels[h] = inst.hypothesis_label(h);
  for (std::size_t d = 0; d < j.n_data; ++d) data_labels[d] = "d" + std::to_string(d);
  std::vector<double> table(j.n_hyp * j.n_data);
  for (std::size_t h = 0; h < j.n_hyp; ++h)
    for (std::size_t d = 0; d < j.n_data; ++d) table[h * j.n_data + d] = j.joint_prob(d, h);
  return JointDist({Axis{"hypothesis", std::move(hyp_labels)}, Axis{"dataset", std::move(data_labels)}},
                   std::move(table));
}

/// Direct route: population minus empirical meta risk.
inline double gen_error_direct(const MetaInstance& inst, const MetaJoint& j) {
  return population_meta_risk(inst, j) - empirical_meta_risk(inst, j);
}

inline double gen_error_direct(const MetaInstance& inst, double cap = kDefaultStateCap) {
  const MetaJoint j = build_meta_joint(inst, cap);
  return gen_error_direct(inst, j);
}

/// Identity route: I_SKL(U, W_1..m ; D) / gamma on the folded joint.
inline double gen_error_skl(const MetaInstance& inst, const MetaJoint& j) {
  if (inst.gamma <= 0.0)
    throw Error("the generalization identity divides by gamma; gamma must be positive");
  const JointDist dist = meta_joint_dist(inst, j);
  return skl_info(dist, "hypothesis", "dataset") / inst.gamma;
}

inline double gen_error_skl(const MetaInstance& inst, double cap = kDefaultStateCap) {
  const MetaJoint j = build_meta_joint(inst, cap);
  return gen_error_skl(inst, j);
}

/// Environment-conditional variant: I_SKL computed per task assignment,
/// then averaged under the task prior. By concavity this never exceeds
/// the folded (mixed-dataset) value.
inline double gen_error_skl_conditional(const MetaInstance& inst, double cap = kDefaultStateCap) {
  if (inst.gamma <= 0.0)
    throw Error("the generalization identity divides by gamma; gamma must be positive");
  const MetaJoint j = build_meta_joint(inst, cap);
  const int m = inst.env.m, n = inst.env.n;
  std::vector<int> tasks(m, 0);
  double acc = 0.0;
  bool done = false;
  while (!done) {
    double pt = 1.0;
    for (int i = 0; i < m; ++i) pt *= inst.env.task_prior.prob(tasks[i]);
    if (pt > 0.0) {
      std::vector<double> table(j.n_hyp * j.n_data);
      for (std::size_t d = 0; d < j.n_data; ++d) {
        const auto digits = dataset_digits(inst, d);
        double pd = 1.0;
        for (int i = 0; i < m; ++i)
          for (int k = 0; k < n; ++k)
            pd *= inst.env.tasks[tasks[i]].prob(digits[i * n + k]);
        for (std::size_t h = 0; h < j.n_hyp; ++h)
          table[h * j.n_data + d] = pd * j.posterior[d * j.n_hyp + h];
      }
      acc += pt * detail::skl_info_table(table, j.n_hyp, j.n_data);
    }
    done = true;
    for (int i = m; i-- > 0;) {
      if (static_cast<std::size_t>(++tasks[i]) < inst.env.task_count()) {
        done = false;
        break;
      }
      tasks[i] = 0;
    }
  }
  return acc / inst.gamma;
}

/// Terms of the lautum-expansion decomposition of I_SKL(U, W_1..m ; D).
struct SklChainDecomposition {
  double iskl_u_d = 0.0;        // I_SKL(U; D)
  double mi_w_d_given_u = 0.0;  // I(W_1..m; D | U)
  double kl_term = 0.0;         // D(P_{W|U} || P_{W|U,D} | P_U x P_D)
  double total = 0.0;           // I_SKL(U, W_1..m; D)
  double residual = 0.0;        // total - (sum of the three terms)
};

inline SklChainDecomposition skl_chain_decomposition(const MetaInstance& inst,
                                                     double cap = kDefaultStateCap) {
  const MetaJoint j = build_meta_joint(inst, cap);
  const std::size_t nu = inst.n_u();
  std::size_t w_combos = 1;
  for (int i = 0; i < inst.env.m; ++i) w_combos *= inst.n_w();

  SklChainDecomposition out;
  out.total = detail::skl_info_table(
      [&] {
        std::vector<double> t(j.n_hyp * j.n_data);
        for (std::size_t h = 0; h < j.n_hyp; ++h)
          for (std::size_t d = 0; d < j.n_data; ++d) t[h * j.n_data + d] = j.joint_prob(d, h);
        return t;
      }(),
      j.n_hyp, j.n_data);

  // I_SKL(U; D) on the U-collapsed joint.
  std::vector<double> ud(nu * j.n_data, 0.0);
  for (std::size_t d = 0; d < j.n_data; ++d)
    for (std::size_t h = 0; h < j.n_hyp; ++h)
      ud[inst.hyp_u(h) * j.n_data + d] += j.joint_prob(d, h);
  out.iskl_u_d = detail::skl_info_table(ud, nu, j.n_data);

  // I(W_1..m; D | U): mutual information of each U slice, weighted by P(U).
  std::vector<double> p_u(nu, 0.0);
  for (std::size_t h = 0; h < j.n_hyp; ++h) p_u[inst.hyp_u(h)] += j.hyp_marginal[h];
  for (std::size_t u = 0; u < nu; ++u) {
    if (p_u[u] < kCondSliceTol) continue;
    std::vector<double> slice(w_combos * j.n_data);
    for (std::size_t c = 0; c < w_combos; ++c)
      for (std::size_t d = 0; d < j.n_data; ++d)
        slice[c * j.n_data + d] = j.joint_prob(d, u * w_combos + c) / p_u[u];
    out.mi_w_d_given_u +=
        p_u[u] * detail::pair_info_table(slice, w_combos, j.n_data, false).mutual;
  }

  // D(P_{W|U} || P_{W|U,D} | P_U x P_D): outer measure is the product.
  for (std::size_t u = 0; u < nu; ++u) {
    if (p_u[u] < kCondSliceTol) continue;
    std::vector<double> w_given_u(w_combos, 0.0);
    for (std::size_t c = 0; c < w_combos; ++c)
      w_given_u[c] = j.hyp_marginal[u * w_combos + c] / p_u[u];
    for (std::size_t d = 0; d < j.n_data; ++d) {
      double pu_d = 0.0;
      for (std::size_t c = 0; c < w_combos; ++c) pu_d += j.posterior[d * j.n_hyp + u * w_combos + c];
      if (pu_d <= 0.0) {
        // P(w|u,d) undefined: only reachable with zero-prior slices, which
        // also zero out P(w|u); skip.
        continue;
      }
      double div = 0.0;
      for (std::size_t c = 0; c < w_combos; ++c) {
        const double pw_u = w_given_u[c];
        if (pw_u <= 0.0) continue;
        const double pw_ud = j.posterior[d * j.n_hyp + u * w_combos + c] / pu_d;
        if (pw_ud <= 0.0)
          throw SupportMismatch("decomposition: P(w|u,d) is zero where P(w|u) is positive");
        div += pw_u * std::log(pw_u / pw_ud);
      }
      out.kl_term += p_u[u] * j.dataset_prob[d] * div;
    }
  }

  out.residual = out.total - (out.iskl_u_d + out.mi_w_d_given_u + out.kl_term);
  return out;
}

/// Product prior pi(u) * prod_i pi(w_i) over the hypothesis space.
inline std::vector<double> product_prior(const DiscreteDist& pu, const DiscreteDist& pw, int m) {
  std::size_t count = pu.size();
  for (int i = 0; i < m; ++i) count *= pw.size();
  std::vector<double> prior(count);
  for (std::size_t h = 0; h < count; ++h) {
    std::size_t rem = h;
    double p = 1.0;
    for (int i = 0; i < m; ++i) {
      p *= pw.prob(rem % pw.size());
      rem /= pw.size();
    }
    prior[h] = p * pu.prob(rem);
  }
  return prior;
}

/// The canonical two-task Bernoulli instance: |Z| = 2, task laws
/// Bern(0.2) and Bern(0.8) under a uniform task prior, m = 2, n = 1,
/// binary U and W, loss(u,w,z) = 0.5*[w != z] + 0.5*[u != w], uniform
/// product prior.
inline MetaInstance bern2_instance(double gamma = 1.0) {
  FiniteEnvironment env({"0", "1"}, {DiscreteDist::bernoulli(0.2), DiscreteDist::bernoulli(0.8)},
                        DiscreteDist::uniform({"t1", "t2"}), 2, 1);
  std::vector<std::string> u_space{"0", "1"}, w_space{"0", "1"};
  std::vector<double> loss(2 * 2 * 2);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t w = 0; w < 2; ++w)
      for (std::size_t z = 0; z < 2; ++z)
        loss[(u * 2 + w) * 2 + z] = 0.5 * (w != z ? 1.0 : 0.0) + 0.5 * (u != w ? 1.0 : 0.0);
  auto prior = product_prior(DiscreteDist::uniform({"0", "1"}), DiscreteDist::uniform({"0", "1"}), 2);
  return MetaInstance(std::move(env), std::move(u_space), std::move(w_space), std::move(loss),
                      gamma, std::move(prior));
}

}  // namespace metagibbs
