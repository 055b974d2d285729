#pragma once

#include <vector>

#include "eac/core.hpp"

namespace fixtures {

// Two identical partitionings of four items: {{0,1},{2,3}} twice.
inline eac::ClusterEnsemble pair_ensemble() {
  std::vector<eac::Label> labels{0, 0, 1, 1};
  std::vector<eac::Partitioning> parts;
  parts.emplace_back(labels, 2);
  parts.emplace_back(labels, 2);
  return eac::ClusterEnsemble(std::move(parts));
}

// Two disagreeing partitionings of three items:
// {{0,1},{2}} and {{0,2},{1}}.
inline eac::ClusterEnsemble tri_ensemble() {
  std::vector<eac::Partitioning> parts;
  parts.emplace_back(std::vector<eac::Label>{0, 0, 1}, 2);
  parts.emplace_back(std::vector<eac::Label>{0, 1, 0}, 2);
  return eac::ClusterEnsemble(std::move(parts));
}

}  // namespace fixtures
