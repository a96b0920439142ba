#include "gptree/projection.hpp"

#include <cmath>
#include <string>

#include "gptree/errors.hpp"
#include "gptree/rng.hpp"

namespace gptree {

ProjectionMatrix::ProjectionMatrix(Eigen::Index source_dim, Eigen::Index target_dim, std::uint64_t seed)
    : seed_(seed) {
  if (source_dim < 1 || target_dim < 1 || target_dim > source_dim) {
    throw InputError("projection requires 1 <= m <= d, got d=" + std::to_string(source_dim) +
                     ", m=" + std::to_string(target_dim));
  }
  matrix_.resize(target_dim, source_dim);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(target_dim));
  for (Eigen::Index i = 0; i < target_dim; ++i) {
    for (Eigen::Index j = 0; j < source_dim; ++j) matrix_(i, j) = scale * rng.normal();
  }
}

ProjectionMatrix build_projection(Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
  return ProjectionMatrix(d, m, seed);
}

Eigen::VectorXd apply_projection(const ProjectionMatrix& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != p.source_dim()) {
    throw InputError("apply_projection: expected dim " + std::to_string(p.source_dim()) + ", got " +
                     std::to_string(x.size()));
  }
  return p.matrix() * x;
}

Eigen::MatrixXd apply_projection_rows(const ProjectionMatrix& p, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.cols() != p.source_dim()) {
    throw InputError("apply_projection: expected dim " + std::to_string(p.source_dim()) + ", got " +
                     std::to_string(rows.cols()));
  }
  return rows * p.matrix().transpose();
}

}  // namespace gptree
