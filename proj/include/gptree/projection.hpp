#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace gptree {

/// Dense Gaussian random projection from d to m dimensions.
///
/// Entries are i.i.d. N(0, 1/m), so E|Px|^2 = |x|^2. The matrix is a pure
/// function of (d, m, seed): entry (i, j) in row-major order is the
/// (i * d + j)-th normal variate of Rng(seed), i.e. Marsaglia polar
/// variates over std::mt19937_64, scaled by 1/sqrt(m).
class ProjectionMatrix {
 public:
  ProjectionMatrix(Eigen::Index source_dim, Eigen::Index target_dim, std::uint64_t seed);

  Eigen::Index source_dim() const { return matrix_.cols(); }
  Eigen::Index target_dim() const { return matrix_.rows(); }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
  std::uint64_t seed_;
};

/// Throws InputError unless 1 <= m <= d.
ProjectionMatrix build_projection(Eigen::Index d, Eigen::Index m, std::uint64_t seed);

/// P x.
Eigen::VectorXd apply_projection(const ProjectionMatrix& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Projects every row of `rows`; returns an (n x m) matrix.
Eigen::MatrixXd apply_projection_rows(const ProjectionMatrix& p, const Eigen::Ref<const Eigen::MatrixXd>& rows);

}  // namespace gptree
