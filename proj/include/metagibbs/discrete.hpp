// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite probability tables: the substrate for every exact information
// measure in the library. Construction validates invariants and rejects
// out-of-tolerance inputs instead of renormalizing, so harness bugs
// surface as errors rather than silently passing identity checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "metagibbs/errors.hpp"

namespace metagibbs {

inline constexpr double kProbSumTol = 1e-12;
inline constexpr double kCondSliceTol = 1e-15;

/// A distribution over an ordered finite set of labeled outcomes.
class DiscreteDist {
 public:
  DiscreteDist(std::vector<std::string> outcomes, std::vector<double> probs)
      : outcomes_(std::move(outcomes)), probs_(std::move(probs)) {
    if (outcomes_.size() != probs_.size())
      throw InvalidDistribution("outcome and probability counts differ");
    if (outcomes_.empty()) throw InvalidDistribution("empty outcome set");
    std::unordered_set<std::string> seen;
    for (const auto& o : outcomes_)
      if (!seen.insert(o).second) throw InvalidDistribution("duplicate outcome '" + o + "'");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw InvalidDistribution("negative or NaN probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTol)
      throw InvalidDistribution("probabilities sum to " + std::to_string(sum) +
                                ", outside 1e-12 of 1 (inputs are rejected, not renormalized)");
  }

  std::size_t size() const { return probs_.size(); }
  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::string& outcome(std::size_t i) const { return outcomes_[i]; }
  double prob(std::size_t i) const { return probs_[i]; }

  bool same_outcome_space(const DiscreteDist& other) const {
    return outcomes_ == other.outcomes_;
  }

  /// Bernoulli over {"0","1"} with P("1") = p1.
  static DiscreteDist bernoulli(double p1) {
    return DiscreteDist({"0", "1"}, {1.0 - p1, p1});
  }

  static DiscreteDist uniform(std::vector<std::string> outcomes) {
    const double p = 1.0 / static_cast<double>(outcomes.size());
    std::vector<double> probs(outcomes.size(), p);
    return DiscreteDist(std::move(outcomes), std::move(probs));
  }

 private:
  std::vector<std::string> outcomes_;
  std::vector<double> probs_;
};

/// One named variable of a joint distribution.
struct Axis {
  std::string name;
  std::vector<std::string> labels;
};

/// A joint distribution over 2-4 named finite variables, stored row-major
/// with the last axis fastest.
class JointDist {
 public:
  JointDist(std::vector<Axis> axes, std::vector<double> table)
      : axes_(std::move(axes)), table_(std::move(table)) {
    if (axes_.size() < 2 || axes_.size() > 4)
      throw InvalidDistribution("joint distributions carry 2-4 axes");
    std::size_t cells = 1;
    std::unordered_set<std::string> names;
    for (const auto& ax : axes_) {
      if (ax.labels.empty()) throw InvalidDistribution("axis '" + ax.name + "' has no labels");
      if (!names.insert(ax.name).second)
        throw InvalidDistribution("duplicate axis name '" + ax.name + "'");
      cells *= ax.labels.size();
    }
    if (table_.size() != cells) throw InvalidDistribution("table size does not match axes");
    double sum = 0.0;
    for (double p : table_) {
      if (!(p >= 0.0)) throw InvalidDistribution("negative or NaN joint probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTol)
      throw InvalidDistribution("joint table sums to " + std::to_string(sum) +
                                ", outside 1e-12 of 1");
  }

  std::size_t axis_count() const { return axes_.size(); }
  const Axis& axis(std::size_t i) const { return axes_[i]; }
  const std::vector<double>& table() const { return table_; }

  std::size_t axis_index(const std::string& name) const {
    for (std::size_t i = 0; i < axes_.size(); ++i)
      if (axes_[i].name == name) return i;
    throw UnknownAxis("no axis named '" + name + "'");
  }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < axes_.size(); ++a) f = f * axes_[a].labels.size() + idx[a];
    return f;
  }

  double prob(std::span<const std::size_t> idx) const { return table_[flat_index(idx)]; }

  DiscreteDist marginal(const std::string& name) const {
    const std::size_t target = axis_index(name);
    std::vector<double> marg(axes_[target].labels.size(), 0.0);
    for_each_cell([&](std::span<const std::size_t> idx, double p) { marg[idx[target]] += p; });
    return DiscreteDist(axes_[target].labels, std::move(marg));
  }

  /// Collapse a group of axes into one composite axis (labels joined by "|"),
  /// marginalizing out everything not mentioned in either group. The result
  /// is the 2-axis joint of the two groups.
  JointDist collapse(std::span<const std::string> x_names,
                     std::span<const std::string> y_names) const {
    const auto x_axes = resolve(x_names);
    const auto y_axes = resolve(y_names);
    const auto [x_labels, x_size] = composite_labels(x_axes);
    const auto [y_labels, y_size] = composite_labels(y_axes);
    std::vector<double> out(x_size * y_size, 0.0);
    for_each_cell([&](std::span<const std::size_t> idx, double p) {
      out[composite_index(x_axes, idx) * y_size + composite_index(y_axes, idx)] += p;
    });
    return JointDist({Axis{"x", x_labels}, Axis{"y", y_labels}}, std::move(out));
  }

  template <class Fn>
  void for_each_cell(Fn&& fn) const {
    std::vector<std::size_t> idx(axes_.size(), 0);
    for (double p : table_) {
      fn(std::span<const std::size_t>(idx), p);
      for (std::size_t a = axes_.size(); a-- > 0;) {
        if (++idx[a] < axes_[a].labels.size()) break;
        idx[a] = 0;
      }
    }
  }

  std::vector<std::size_t> resolve(std::span<const std::string> names) const {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(axis_index(n));
    return out;
  }

  std::size_t composite_index(std::span<const std::size_t> axes,
                              std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t a : axes) f = f * axes_[a].labels.size() + idx[a];
    return f;
  }

  std::pair<std::vector<std::string>, std::size_t> composite_labels(
      std::span<const std::size_t> axes) const {
    std::vector<std::string> labels{""};
    for (std::size_t a : axes) {
      std::vector<std::string> next;
      next.reserve(labels.size() * axes_[a].labels.size());
      for (const auto& prefix : labels)
        for (const auto& l : axes_[a].labels)
          next.push_back(prefix.empty() ? l : prefix + "|" + l);
      labels = std::move(next);
    }
    return {labels, labels.size()};
  }

 private:
  std::vector<Axis> axes_;
  std::vector<double> table_;
};

}  // namespace metagibbs
