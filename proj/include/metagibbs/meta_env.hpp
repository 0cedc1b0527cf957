// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite task environments: a prior over tasks, a per-sample law for each
// task, and (m, n) meta-dataset shapes. Supports exact enumeration of all
// (task assignment, dataset) pairs with their probabilities, and seeded
// counter-based Monte Carlo draws.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "metagibbs/discrete.hpp"
#include "metagibbs/errors.hpp"
#include "metagibbs/rng.hpp"

namespace metagibbs {

inline constexpr double kDefaultStateCap = 1e7;

struct FiniteEnvironment {
  std::vector<std::string> sample_space;
  std::vector<DiscreteDist> tasks;  // per-task sample law; samples i.i.d. within a task
  DiscreteDist task_prior;          // over task indices/labels
  int m = 1;                        // tasks per meta-dataset
  int n = 1;                        // samples per task

  FiniteEnvironment(std::vector<std::string> sample_space_in, std::vector<DiscreteDist> tasks_in,
                    DiscreteDist task_prior_in, int m_in, int n_in)
      : sample_space(std::move(sample_space_in)),
        tasks(std::move(tasks_in)),
        task_prior(std::move(task_prior_in)),
        m(m_in),
        n(n_in) {
    if (m < 1 || n < 1) throw Error("environment requires m >= 1 and n >= 1");
    if (tasks.empty()) throw Error("environment requires at least one task");
    if (task_prior.size() != tasks.size())
      throw InvalidDistribution("task prior size does not match the task count");
    for (const auto& t : tasks)
      if (t.outcomes() != sample_space)
        throw DomainMismatch("task law is not defined over the environment sample space");
  }

  std::size_t z_count() const { return sample_space.size(); }
  std::size_t task_count() const { return tasks.size(); }
};

/// One meta-dataset: task assignment plus an m-by-n array of outcome
/// indices (row-major by task). probability is exact in enumeration mode.
struct MetaSample {
  std::vector<int> task_ids;  // length m
  std::vector<int> data;      // m*n outcome indices, data[i*n + j]
  double probability = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
};

namespace detail {

inline double pow_count(double base, int exp) {
  double v = 1.0;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

}  // namespace detail

/// Number of states exact enumeration would visit.
inline double enumeration_state_count(const FiniteEnvironment& env) {
  return detail::pow_count(static_cast<double>(env.task_count()), env.m) *
         detail::pow_count(static_cast<double>(env.z_count()), env.m * env.n);
}

/// Visit every (task assignment, dataset) pair exactly once with its exact
/// probability. Probabilities sum to 1 within 1e-10.
inline void enumerate_meta_datasets(const FiniteEnvironment& env,
                                    const std::function<void(const MetaSample&)>& fn,
                                    double cap = kDefaultStateCap) {
  const double states = enumeration_state_count(env);
  if (states > cap)
    throw StateSpaceTooLarge("enumeration needs " + std::to_string(states) +
                                 " states, above the cap of " + std::to_string(cap),
                             states);
  const int m = env.m, n = env.n;
  MetaSample s;
  s.task_ids.assign(m, 0);
  s.data.assign(static_cast<std::size_t>(m) * n, 0);
  const std::size_t nt = env.task_count(), nz = env.z_count();

  auto advance = [](std::vector<int>& digits, std::size_t base) {
    for (std::size_t k = digits.size(); k-- > 0;) {
      if (static_cast<std::size_t>(++digits[k]) < base) return true;
      digits[k] = 0;
    }
    return false;  // wrapped around
  };

  do {
    double p = 1.0;
    for (int i = 0; i < m; ++i) {
      p *= env.task_prior.prob(s.task_ids[i]);
      const auto& law = env.tasks[s.task_ids[i]];
      for (int j = 0; j < n; ++j) p *= law.prob(s.data[i * n + j]);
    }
    s.probability = p;
    fn(s);
  } while (advance(s.data, nz) || advance(s.task_ids, nt));
}

/// Deterministic Monte Carlo draw of one meta-dataset: a pure function of
/// (master_seed, trial_index).
inline MetaSample sample_meta_datasets(const FiniteEnvironment& env, std::uint64_t master_seed,
                                       std::uint64_t trial_index) {
  MetaSample s;
  s.master_seed = master_seed;
  s.trial_index = trial_index;
  s.task_ids.resize(env.m);
  s.data.resize(static_cast<std::size_t>(env.m) * env.n);
  SubstreamRng task_rng(master_seed, trial_index, StreamRole::TaskDraw);
  SubstreamRng sample_rng(master_seed, trial_index, StreamRole::SampleDraw);
  for (int i = 0; i < env.m; ++i) {
    s.task_ids[i] = task_rng.draw_index(env.task_prior.probs());
    const auto& law = env.tasks[s.task_ids[i]];
    for (int j = 0; j < env.n; ++j) s.data[i * env.n + j] = sample_rng.draw_index(law.probs());
  }
  return s;
}

/// A fresh test task and its n-sample dataset, from a substream
/// independent of the training draws.
inline std::pair<int, std::vector<int>> test_task_draw(const FiniteEnvironment& env,
                                                       std::uint64_t master_seed,
                                                       std::uint64_t trial_index) {
  SubstreamRng rng(master_seed, trial_index, StreamRole::TestTaskDraw);
  const int task = rng.draw_index(env.task_prior.probs());
  std::vector<int> data(env.n);
  for (int j = 0; j < env.n; ++j) data[j] = rng.draw_index(env.tasks[task].probs());
  return {task, std::move(data)};
}

/// The environment-mixed law of a single task's n-sample block:
/// P(block) = sum_t P_tau(t) prod_j P_t(z_j). Blocks are indexed base-|Z|
/// with the last sample fastest.
inline std::vector<double> folded_block_law(const FiniteEnvironment& env) {
  const std::size_t nz = env.z_count();
  std::size_t blocks = 1;
  for (int j = 0; j < env.n; ++j) blocks *= nz;
  std::vector<double> law(blocks, 0.0);
  std::vector<int> digits(env.n, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    double p = 0.0;
    for (std::size_t t = 0; t < env.task_count(); ++t) {
      double q = env.task_prior.prob(t);
      for (int j = 0; j < env.n; ++j) q *= env.tasks[t].prob(digits[j]);
      p += q;
    }
    law[b] = p;
    for (int j = env.n; j-- > 0;) {
      if (static_cast<std::size_t>(++digits[j]) < nz) break;
      digits[j] = 0;
    }
  }
  return law;
}

}  // namespace metagibbs
