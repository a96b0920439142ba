#include "gptree/arms.hpp"

namespace gptree {

ArmSet ArmSet::all(std::shared_ptr<const Eigen::MatrixXd> features) {
  ArmSet arms;
  arms.untested.resize(static_cast<std::size_t>(features->rows()));
  for (std::size_t i = 0; i < arms.untested.size(); ++i) arms.untested[i] = i;
  arms.features = std::move(features);
  return arms;
}

Eigen::MatrixXd ArmSet::untested_features() const { return rows(untested); }

Eigen::MatrixXd ArmSet::rows(const std::vector<std::size_t>& indices) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features->row(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

ArmSet ArmSet::without(const std::vector<std::size_t>& indices) const {
  std::vector<bool> drop(total(), false);
  for (std::size_t i : indices) {
    if (i < drop.size()) drop[i] = true;
  }
  ArmSet out;
  out.features = features;
  for (std::size_t i : untested) {
    if (!drop[i]) out.untested.push_back(i);
  }
  return out;
}

}  // namespace gptree
