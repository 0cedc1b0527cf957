// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON-tree forms of the finite distributions, for golden-file tests and
// config round trips. Tables are row-major with the last axis fastest,
// matching the in-memory layout.

#include <json.hpp>

#include "metagibbs/discrete.hpp"

namespace metagibbs {

inline nlohmann::json to_json_tree(const DiscreteDist& d) {
  nlohmann::json out;
  out["outcomes"] = d.outcomes();
  out["probs"] = d.probs();
  return out;
}

inline DiscreteDist discrete_from_json(const nlohmann::json& node) {
  return DiscreteDist(node.at("outcomes").get<std::vector<std::string>>(),
                      node.at("probs").get<std::vector<double>>());
}

inline nlohmann::json to_json_tree(const JointDist& j) {
  nlohmann::json axes = nlohmann::json::array();
  for (std::size_t a = 0; a < j.axis_count(); ++a)
    axes.push_back({{"name", j.axis(a).name}, {"labels", j.axis(a).labels}});
  nlohmann::json out;
  out["axes"] = axes;
  out["table"] = j.table();
  return out;
}

inline JointDist joint_from_json(const nlohmann::json& node) {
  std::vector<Axis> axes;
  for (const auto& a : node.at("axes"))
    axes.push_back(
        {a.at("name").get<std::string>(), a.at("labels").get<std::vector<std::string>>()});
  return JointDist(std::move(axes), node.at("table").get<std::vector<double>>());
}

}  // namespace metagibbs
