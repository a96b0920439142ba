#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "gptree/rng.hpp"

namespace gptree {

enum class KernelKind { kRbf };

struct KernelSpec {
  KernelKind kind = KernelKind::kRbf;
  double lengthscale = 1.0;
  double signal_variance = 1.0;

  /// Throws InputError unless lengthscale and signal_variance are positive.
  void validate() const;
};

/// Squared-exponential kernel: signal_variance * exp(-|x - x2|^2 / (2 lengthscale^2)).
double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

/// Cross-covariance between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b);

/// Posterior snapshot of an exact GP with constant prior mean.
///
/// Immutable: conditioning returns a new belief and leaves this one intact,
/// so beliefs can be shared freely between threads. Observations are stored
/// as rows of `inputs()`. The cached factor satisfies
/// L L^T = K(inputs, inputs) + noise_variance * I and alpha solves
/// (K + noise I) alpha = targets - prior_mean.
class GpBelief {
 public:
  /// Empty belief (the prior). Input dimension is fixed by the first observation.
  GpBelief(KernelSpec kernel, double noise_variance, double prior_mean = 0.0);

  /// Full factorization from scratch.
  static GpBelief fit(KernelSpec kernel, double noise_variance, Eigen::MatrixXd inputs,
                      Eigen::VectorXd targets, double prior_mean = 0.0);

  /// New belief with one more observation, via a rank-one Cholesky extension.
  /// Falls back to a full refactorization if the extension breaks down.
  GpBelief condition(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const;

  /// New belief with all rows of `xs` observed jointly (block extension).
  GpBelief condition(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                     const Eigen::Ref<const Eigen::VectorXd>& ys) const;

  const KernelSpec& kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }
  double prior_mean() const { return prior_mean_; }
  std::size_t size() const { return static_cast<std::size_t>(targets_.size()); }
  bool empty() const { return targets_.size() == 0; }
  /// Input dimension, or 0 while the belief is empty.
  Eigen::Index dim() const { return inputs_.cols(); }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

  /// Throws InputError when `d` does not match a non-empty belief.
  void check_dim(Eigen::Index d) const;

 private:
  void refactor();
  void solve_alpha();

  KernelSpec kernel_;
  double noise_variance_;
  double prior_mean_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

struct PosteriorGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct PosteriorMarginals {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Joint predictive of f at the query rows. Covariance is symmetrized and
/// its diagonal clamped at zero.
PosteriorGaussian posterior(const GpBelief& b, const Eigen::Ref<const Eigen::MatrixXd>& queries);

/// Mean and variance only; O(n m) memory instead of O(m^2).
PosteriorMarginals posterior_marginals(const GpBelief& b, const Eigen::Ref<const Eigen::MatrixXd>& queries);

inline constexpr double kSampleJitter = 1e-9;

/// Draws joint samples of f over a fixed candidate set. Factorizes the
/// jittered posterior covariance once; each draw costs O(m^2).
class PosteriorSampler {
 public:
  PosteriorSampler(const GpBelief& b, const Eigen::Ref<const Eigen::MatrixXd>& candidates);

  Eigen::Index size() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }

  /// mean + L z with z consumed from `rng` in candidate order.
  Eigen::VectorXd draw(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;
};

/// One joint posterior draw of f over `candidates`.
Eigen::VectorXd sample_function_values(const GpBelief& b, const Eigen::Ref<const Eigen::MatrixXd>& candidates,
                                       Rng& rng);

/// One draw of a noisy observation y at x from the predictive distribution.
double sample_outcome(const GpBelief& b, const Eigen::Ref<const Eigen::VectorXd>& x, Rng& rng);

/// Joint draw of noisy observations at the rows of `xs`.
Eigen::VectorXd sample_outcomes(const GpBelief& b, const Eigen::Ref<const Eigen::MatrixXd>& xs, Rng& rng);

}  // namespace gptree
