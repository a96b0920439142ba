#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <vector>

namespace gptree {

/// Candidate drugs seen by a policy: the full feature matrix (one row per
/// arm) and the indices of arms that have not been tested yet. Policies
/// return indices into the full matrix.
struct ArmSet {
  std::shared_ptr<const Eigen::MatrixXd> features;
  std::vector<std::size_t> untested;

  /// All arms untested.
  static ArmSet all(std::shared_ptr<const Eigen::MatrixXd> features);

  std::size_t total() const { return features ? static_cast<std::size_t>(features->rows()) : 0; }
  Eigen::Index dim() const { return features ? features->cols() : 0; }

  /// Feature rows of the untested arms, in `untested` order.
  Eigen::MatrixXd untested_features() const;
  /// Feature rows for an arbitrary list of arm indices.
  Eigen::MatrixXd rows(const std::vector<std::size_t>& indices) const;

  /// Copy with `indices` removed from the untested list.
  ArmSet without(const std::vector<std::size_t>& indices) const;
};

}  // namespace gptree
