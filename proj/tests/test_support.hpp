// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared helpers for the test suites: seeded random distributions and
// randomized instance generators at enumerable sizes.

#include <cstdint>
#include <string>
#include <vector>

#include "metagibbs/discrete.hpp"
#include "metagibbs/meta_gibbs.hpp"
#include "metagibbs/rng.hpp"
#include "metagibbs/super_task.hpp"

namespace metagibbs::testing {

inline std::vector<std::string> labels(const std::string& prefix, std::size_t count) {
  std::vector<std::string> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = prefix + std::to_string(i);
  return out;
}

/// Strictly positive random probability vector (normalized exponentials).
inline std::vector<double> random_probs(SubstreamRng& rng, std::size_t count) {
  std::vector<double> p(count);
  double sum = 0.0;
  for (auto& v : p) {
    v = 0.05 + rng.next_double();
    sum += v;
  }
  for (auto& v : p) v /= sum;
  // Exact renormalization so construction-tolerance checks never flake.
  double s2 = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) s2 += p[i];
  p.back() = 1.0 - s2;
  return p;
}

struct RandomInstanceShape {
  std::size_t n_z = 2, n_u = 2, n_w = 2, n_tasks = 2;
  int m = 1, n = 1;
  double gamma = 1.0;
};

inline RandomInstanceShape random_shape(SubstreamRng& rng) {
  RandomInstanceShape s;
  s.n_z = 2 + (rng.next_u64() % 2);
  s.n_u = 2 + (rng.next_u64() % 2);
  s.n_w = 2 + (rng.next_u64() % 2);
  s.n_tasks = 2 + (rng.next_u64() % 2);
  s.m = 1 + static_cast<int>(rng.next_u64() % 2);
  s.n = 1 + static_cast<int>(rng.next_u64() % 2);
  const double gammas[3] = {0.5, 1.0, 2.0};
  s.gamma = gammas[rng.next_u64() % 3];
  return s;
}

/// Random enumerable meta instance with loss in [0,1] and a uniform
/// product prior.
inline MetaInstance random_meta_instance(std::uint64_t seed) {
  SubstreamRng rng(seed, 0, StreamRole::TaskDraw);
  const RandomInstanceShape s = random_shape(rng);
  auto z_labels = labels("z", s.n_z);
  std::vector<DiscreteDist> tasks;
  for (std::size_t t = 0; t < s.n_tasks; ++t) tasks.emplace_back(z_labels, random_probs(rng, s.n_z));
  FiniteEnvironment env(z_labels, std::move(tasks),
                        DiscreteDist(labels("t", s.n_tasks), random_probs(rng, s.n_tasks)), s.m,
                        s.n);
  std::vector<double> loss(s.n_u * s.n_w * s.n_z);
  for (auto& l : loss) l = rng.next_double();
  auto prior = product_prior(DiscreteDist::uniform(labels("u", s.n_u)),
                             DiscreteDist::uniform(labels("w", s.n_w)), s.m);
  return MetaInstance(std::move(env), labels("u", s.n_u), labels("w", s.n_w), std::move(loss),
                      s.gamma, std::move(prior));
}

/// Random enumerable super-task instance (m = 1 with n in {1,2}, or m = 2
/// with n = 1) with loss in [0,1] and uniform priors.
inline SuperInstance random_super_instance(std::uint64_t seed) {
  SubstreamRng rng(seed, 1, StreamRole::TaskDraw);
  const bool wide = (rng.next_u64() & 1u) != 0;
  const int m = wide ? 2 : 1;
  const int n = wide ? 1 : 1 + static_cast<int>(rng.next_u64() % 2);
  const double gammas[3] = {0.5, 1.0, 2.0};
  const double gamma = gammas[rng.next_u64() % 3];
  auto z_labels = labels("z", 2);
  std::vector<DiscreteDist> tasks;
  for (int t = 0; t < 2; ++t) tasks.emplace_back(z_labels, random_probs(rng, 2));
  std::vector<double> loss(2 * 2 * 2);
  for (auto& l : loss) l = rng.next_double();
  std::size_t wc = 1;
  for (int i = 0; i < m; ++i) wc *= 2;
  return SuperInstance(z_labels, std::move(tasks),
                       DiscreteDist(labels("t", 2), random_probs(rng, 2)), labels("u", 2),
                       labels("w", 2), std::move(loss), gamma,
                       std::vector<double>(2 * wc, 1.0 / (2 * wc)),
                       std::vector<double>(wc, 1.0 / wc), m, n);
}

}  // namespace metagibbs::testing
