// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact KL-type divergences and (conditional) information measures on
// finite distributions. All values are in nats. The 0*log(0) = 0
// convention applies throughout; absolute-continuity failures are hard
// errors, never clamped.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "metagibbs/discrete.hpp"
#include "metagibbs/errors.hpp"

namespace metagibbs {

enum class InfoKind { Mutual, Lautum, Skl };

namespace detail {

// Internal consistency tolerance for the two computation routes of the
// symmetrized KL information inside a single call.
inline constexpr double kSklAdditivityTol = 1e-12;

/// KL between two aligned probability vectors (p absolutely continuous w.r.t. q).
inline double kl_vec(std::span<const double> p, std::span<const double> q,
                     const char* what = "kl") {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0)
        throw SupportMismatch(std::string(what) +
                              ": first argument has mass where second is zero (outcome index " +
                              std::to_string(i) + ")");
      sum += p[i] * std::log(p[i] / q[i]);
    }
  }
  return sum;
}

struct PairInfo {
  double mutual;
  double lautum;
};

/// Mutual and lautum information of a row-major nx-by-ny joint table.
/// The lautum direction throws SupportMismatch when the joint fails to
/// dominate the product of its marginals.
inline PairInfo pair_info_table(std::span<const double> joint, std::size_t nx, std::size_t ny,
                                bool need_lautum) {
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      px[x] += joint[x * ny + y];
      py[y] += joint[x * ny + y];
    }
  double mi = 0.0, lautum = 0.0;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      const double pj = joint[x * ny + y];
      const double pp = px[x] * py[y];
      if (pj > 0.0) mi += pj * std::log(pj / pp);  // pj > 0 implies pp > 0
      if (need_lautum && pp > 0.0) {
        if (pj <= 0.0)
          throw SupportMismatch(
              "lautum: joint assigns zero mass where the product of marginals is positive "
              "(cell " +
              std::to_string(x) + "," + std::to_string(y) + ")");
        lautum += pp * std::log(pp / pj);
      }
    }
  return {mi, lautum};
}

/// Symmetrized KL information of a joint table, computed as I + L and
/// cross-checked against the direct D_SKL(joint || product) evaluation.
inline double skl_info_table(std::span<const double> joint, std::size_t nx, std::size_t ny) {
  const PairInfo info = pair_info_table(joint, nx, ny, /*need_lautum=*/true);
  const double additive = info.mutual + info.lautum;
  // Direct route: D(joint||prod) + D(prod||joint) on the flattened tables.
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      px[x] += joint[x * ny + y];
      py[y] += joint[x * ny + y];
    }
  double direct = 0.0;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      const double pj = joint[x * ny + y];
      const double pp = px[x] * py[y];
      if (pj > 0.0) direct += (pj - pp) * std::log(pj / pp);
    }
  if (std::abs(direct - additive) > kSklAdditivityTol)
    throw Error("skl_info internal routes disagree by " + std::to_string(direct - additive));
  return additive;
}

}  // namespace detail

/// D(p || q) in nats. Requires identical outcome spaces and p << q.
inline double kl(const DiscreteDist& p, const DiscreteDist& q) {
  if (!p.same_outcome_space(q))
    throw DomainMismatch("kl: distributions live on different outcome spaces");
  return detail::kl_vec(p.probs(), q.probs());
}

/// Jeffreys divergence D(p||q) + D(q||p) in nats. Requires mutual absolute continuity.
inline double skl(const DiscreteDist& p, const DiscreteDist& q) {
  return kl(p, q) + kl(q, p);
}

/// I(X;Y) = D(P_XY || P_X (x) P_Y) in nats; axis groups are collapsed first.
inline double mutual_info(const JointDist& j, std::span<const std::string> x_axes,
                          std::span<const std::string> y_axes) {
  const JointDist c = j.collapse(x_axes, y_axes);
  const std::size_t nx = c.axis(0).labels.size(), ny = c.axis(1).labels.size();
  return detail::pair_info_table(c.table(), nx, ny, false).mutual;
}

inline double mutual_info(const JointDist& j, const std::string& x_axis,
                          const std::string& y_axis) {
  return mutual_info(j, std::span<const std::string>(&x_axis, 1),
                     std::span<const std::string>(&y_axis, 1));
}

/// L(X;Y) = D(P_X (x) P_Y || P_XY) in nats. Requires the joint to dominate
/// the product of marginals.
inline double lautum_info(const JointDist& j, std::span<const std::string> x_axes,
                          std::span<const std::string> y_axes) {
  const JointDist c = j.collapse(x_axes, y_axes);
  const std::size_t nx = c.axis(0).labels.size(), ny = c.axis(1).labels.size();
  return detail::pair_info_table(c.table(), nx, ny, true).lautum;
}

inline double lautum_info(const JointDist& j, const std::string& x_axis,
                          const std::string& y_axis) {
  return lautum_info(j, std::span<const std::string>(&x_axis, 1),
                     std::span<const std::string>(&y_axis, 1));
}

/// I_SKL(X;Y) = I(X;Y) + L(X;Y) in nats, with the additivity identity
/// asserted against the direct symmetrized-KL evaluation inside the call.
inline double skl_info(const JointDist& j, std::span<const std::string> x_axes,
                       std::span<const std::string> y_axes) {
  const JointDist c = j.collapse(x_axes, y_axes);
  const std::size_t nx = c.axis(0).labels.size(), ny = c.axis(1).labels.size();
  return detail::skl_info_table(c.table(), nx, ny);
}

inline double skl_info(const JointDist& j, const std::string& x_axis, const std::string& y_axis) {
  return skl_info(j, std::span<const std::string>(&x_axis, 1),
                  std::span<const std::string>(&y_axis, 1));
}

/// Conditional information measure E_{P_Z}[measure(X;Y | Z=z)] in nats.
/// Slices with P(Z=z) below 1e-15 are skipped; a slice failing the lautum
/// support requirement reports the offending z label.
inline double cond_info(const JointDist& j, std::span<const std::string> x_axes,
                        std::span<const std::string> y_axes,
                        std::span<const std::string> z_axes, InfoKind kind) {
  const auto xi = j.resolve(x_axes);
  const auto yi = j.resolve(y_axes);
  const auto zi = j.resolve(z_axes);
  auto size_of = [&](std::span<const std::size_t> axes) {
    std::size_t s = 1;
    for (auto a : axes) s *= j.axis(a).labels.size();
    return s;
  };
  const std::size_t nx = size_of(xi), ny = size_of(yi), nz = size_of(zi);
  std::vector<double> pz(nz, 0.0);
  std::vector<double> slices(nz * nx * ny, 0.0);
  j.for_each_cell([&](std::span<const std::size_t> idx, double p) {
    const std::size_t z = j.composite_index(zi, idx);
    pz[z] += p;
    slices[(z * nx + j.composite_index(xi, idx)) * ny + j.composite_index(yi, idx)] += p;
  });

  double acc = 0.0;
  std::vector<double> cond(nx * ny);
  for (std::size_t z = 0; z < nz; ++z) {
    if (pz[z] < kCondSliceTol) continue;
    for (std::size_t c = 0; c < nx * ny; ++c) cond[c] = slices[z * nx * ny + c] / pz[z];
    try {
      switch (kind) {
        case InfoKind::Mutual:
          acc += pz[z] * detail::pair_info_table(cond, nx, ny, false).mutual;
          break;
        case InfoKind::Lautum:
          acc += pz[z] * detail::pair_info_table(cond, nx, ny, true).lautum;
          break;
        case InfoKind::Skl:
          acc += pz[z] * detail::skl_info_table(cond, nx, ny);
          break;
      }
    } catch (const SupportMismatch& e) {
      throw SupportMismatch("conditioning slice z=" + std::to_string(z) + ": " + e.what());
    }
  }
  return acc;
}

inline double cond_info(const JointDist& j, const std::string& x_axis, const std::string& y_axis,
                        const std::string& z_axis, InfoKind kind) {
  return cond_info(j, std::span<const std::string>(&x_axis, 1),
                   std::span<const std::string>(&y_axis, 1),
                   std::span<const std::string>(&z_axis, 1), kind);
}

}  // namespace metagibbs
