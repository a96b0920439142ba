#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "gptree/arms.hpp"
#include "gptree/rng.hpp"

namespace gptree {

/// Bayesian linear-reward Thompson sampling state (LB-TS baseline).
///
/// B accumulates the identity prior plus sum x x^T, f accumulates sum x y,
/// and mu_hat = B^{-1} f. Samples are mu ~ N(mu_hat, v^2 B^{-1}).
struct LinTSState {
  Eigen::Index d = 0;
  Eigen::MatrixXd B;
  Eigen::VectorXd f;
  Eigen::VectorXd mu_hat;
  double v = 0.0;
  double R = 1.0;
  double delta = 0.5;
  int horizon = 2;
};

/// v = R sqrt(24 / eps * d * ln(1 / delta)) with eps = 1 / ln T.
double lints_scale(double R, Eigen::Index d, double delta, int T);

LinTSState lints_init(Eigen::Index d, double R, double delta, int T);

/// Index (into the full arm matrix) of argmax_x x^T mu over untested arms.
/// Ties go to the lowest arm index.
std::size_t lints_step(const LinTSState& s, const ArmSet& arms, Rng& rng);

/// One draw of mu ~ N(mu_hat, v^2 B^{-1}).
Eigen::VectorXd lints_sample_mean(const LinTSState& s, Rng& rng);

LinTSState lints_update(const LinTSState& s, const Eigen::Ref<const Eigen::VectorXd>& x, double y);

}  // namespace gptree
