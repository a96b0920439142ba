#include "gptree/gp.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "gptree/errors.hpp"

namespace gptree {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Lower Cholesky factor of `a`, or an empty matrix on failure.
bool try_cholesky(const MatrixXd& a, MatrixXd& lower) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.allFinite();
}

MatrixXd jittered_factor(MatrixXd cov, double jitter, const char* what) {
  cov.diagonal().array() += jitter;
  MatrixXd lower;
  if (!try_cholesky(cov, lower)) {
    std::ostringstream msg;
    msg << what << ": Cholesky of jittered covariance failed (size " << cov.rows()
        << ", min diagonal " << (cov.size() ? cov.diagonal().minCoeff() : 0.0) << ")";
    throw NumericalError(msg.str());
  }
  return lower;
}

}  // namespace

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InputError("kernel lengthscale must be positive, got " + std::to_string(lengthscale));
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw InputError("kernel signal_variance must be positive, got " + std::to_string(signal_variance));
  }
}

double kernel_eval(const KernelSpec& k, const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& x2) {
  if (x.size() != x2.size()) {
    throw InputError("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(x2.size()) + ")");
  }
  const double sq = (x - x2).squaredNorm();
  return k.signal_variance * std::exp(-sq / (2.0 * k.lengthscale * k.lengthscale));
}

MatrixXd kernel_matrix(const KernelSpec& k, const Eigen::Ref<const MatrixXd>& a, const Eigen::Ref<const MatrixXd>& b) {
  if (a.cols() != b.cols()) {
    throw InputError("kernel_matrix: dimension mismatch (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  }
  const VectorXd an = a.rowwise().squaredNorm();
  const VectorXd bn = b.rowwise().squaredNorm();
  MatrixXd sq = -2.0 * (a * b.transpose());
  sq.colwise() += an;
  sq.rowwise() += bn.transpose();
  const double scale = -1.0 / (2.0 * k.lengthscale * k.lengthscale);
  return k.signal_variance * (sq.cwiseMax(0.0) * scale).array().exp().matrix();
}

GpBelief::GpBelief(KernelSpec kernel, double noise_variance, double prior_mean)
    : kernel_(kernel), noise_variance_(noise_variance), prior_mean_(prior_mean) {
  kernel_.validate();
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw InputError("noise_variance must be non-negative, got " + std::to_string(noise_variance));
  }
  if (!std::isfinite(prior_mean)) throw InputError("prior_mean must be finite");
}

GpBelief GpBelief::fit(KernelSpec kernel, double noise_variance, MatrixXd inputs, VectorXd targets,
                       double prior_mean) {
  GpBelief b(kernel, noise_variance, prior_mean);
  if (inputs.rows() != targets.size()) {
    throw InputError("GpBelief::fit: " + std::to_string(inputs.rows()) + " inputs but " +
                     std::to_string(targets.size()) + " targets");
  }
  if (!targets.allFinite()) throw InputError("GpBelief::fit: non-finite target");
  b.inputs_ = std::move(inputs);
  b.targets_ = std::move(targets);
  b.refactor();
  return b;
}

void GpBelief::check_dim(Index d) const {
  if (!empty() && d != dim()) {
    throw InputError("dimension mismatch: belief has dim " + std::to_string(dim()) + ", got " + std::to_string(d));
  }
}

void GpBelief::refactor() {
  MatrixXd gram = kernel_matrix(kernel_, inputs_, inputs_);
  gram.diagonal().array() += noise_variance_;
  if (!try_cholesky(gram, chol_)) {
    std::ostringstream msg;
    msg << "GP factorization failed: Gram matrix plus noise (" << noise_variance_ << ") is not positive definite for "
        << inputs_.rows() << " observations; duplicate inputs with zero noise are the usual cause";
    throw NumericalError(msg.str());
  }
  solve_alpha();
}

void GpBelief::solve_alpha() {
  VectorXd centered = targets_.array() - prior_mean_;
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(centered);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

GpBelief GpBelief::condition(const Eigen::Ref<const VectorXd>& x, double y) const {
  MatrixXd xs = x.transpose();
  VectorXd ys(1);
  ys(0) = y;
  return condition(xs, ys);
}

GpBelief GpBelief::condition(const Eigen::Ref<const MatrixXd>& xs, const Eigen::Ref<const VectorXd>& ys) const {
  if (xs.rows() != ys.size()) throw InputError("condition: inputs and targets differ in count");
  if (xs.rows() == 0) return *this;
  check_dim(xs.cols());
  if (!ys.allFinite()) throw InputError("condition: non-finite target");

  const Index n = static_cast<Index>(size());
  const Index m = xs.rows();
  GpBelief next(*this);
  next.inputs_.conservativeResize(n + m, xs.cols());
  next.inputs_.bottomRows(m) = xs;
  next.targets_.conservativeResize(n + m);
  next.targets_.tail(m) = ys;

  // [L 0; B^T C] with B = L^{-1} K(X, xs) and C C^T = K(xs, xs) + noise I - B^T B.
  MatrixXd cross = n > 0 ? kernel_matrix(kernel_, inputs_, xs) : MatrixXd(0, m);
  MatrixXd block = kernel_matrix(kernel_, xs, xs);
  block.diagonal().array() += noise_variance_;
  if (n > 0) {
    chol_.triangularView<Eigen::Lower>().solveInPlace(cross);
    block.noalias() -= cross.transpose() * cross;
  }
  MatrixXd corner;
  if (try_cholesky(block, corner)) {
    next.chol_ = MatrixXd::Zero(n + m, n + m);
    next.chol_.topLeftCorner(n, n) = chol_;
    next.chol_.bottomLeftCorner(m, n) = cross.transpose();
    next.chol_.bottomRightCorner(m, m) = corner;
    next.solve_alpha();
  } else {
    next.refactor();
  }
  return next;
}

PosteriorGaussian posterior(const GpBelief& b, const Eigen::Ref<const MatrixXd>& queries) {
  b.check_dim(queries.cols());
  PosteriorGaussian out;
  MatrixXd prior = kernel_matrix(b.kernel(), queries, queries);
  if (b.empty()) {
    out.mean = VectorXd::Constant(queries.rows(), b.prior_mean());
    out.covariance = std::move(prior);
  } else {
    MatrixXd cross = kernel_matrix(b.kernel(), b.inputs(), queries);
    out.mean = (cross.transpose() * b.alpha()).array() + b.prior_mean();
    b.cholesky().triangularView<Eigen::Lower>().solveInPlace(cross);
    prior.selfadjointView<Eigen::Lower>().rankUpdate(cross.transpose(), -1.0);
    out.covariance = std::move(prior);
  }
  out.covariance.triangularView<Eigen::StrictlyUpper>() = out.covariance.transpose();
  out.covariance.diagonal() = out.covariance.diagonal().cwiseMax(0.0);
  return out;
}

PosteriorMarginals posterior_marginals(const GpBelief& b, const Eigen::Ref<const MatrixXd>& queries) {
  b.check_dim(queries.cols());
  PosteriorMarginals out;
  out.variance = VectorXd::Constant(queries.rows(), b.kernel().signal_variance);
  if (b.empty()) {
    out.mean = VectorXd::Constant(queries.rows(), b.prior_mean());
    return out;
  }
  MatrixXd cross = kernel_matrix(b.kernel(), b.inputs(), queries);
  out.mean = (cross.transpose() * b.alpha()).array() + b.prior_mean();
  b.cholesky().triangularView<Eigen::Lower>().solveInPlace(cross);
  out.variance -= cross.colwise().squaredNorm().transpose();
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

PosteriorSampler::PosteriorSampler(const GpBelief& b, const Eigen::Ref<const MatrixXd>& candidates) {
  if (candidates.rows() == 0) return;
  PosteriorGaussian post = posterior(b, candidates);
  mean_ = std::move(post.mean);
  chol_ = jittered_factor(std::move(post.covariance), kSampleJitter, "sample_function_values");
}

VectorXd PosteriorSampler::draw(Rng& rng) const {
  VectorXd z(mean_.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

VectorXd sample_function_values(const GpBelief& b, const Eigen::Ref<const MatrixXd>& candidates, Rng& rng) {
  if (candidates.rows() == 0) return VectorXd();
  return PosteriorSampler(b, candidates).draw(rng);
}

double sample_outcome(const GpBelief& b, const Eigen::Ref<const VectorXd>& x, Rng& rng) {
  const MatrixXd q = x.transpose();
  const PosteriorMarginals post = posterior_marginals(b, q);
  const double sd = std::sqrt(post.variance(0) + b.noise_variance());
  return post.mean(0) + sd * rng.normal();
}

VectorXd sample_outcomes(const GpBelief& b, const Eigen::Ref<const MatrixXd>& xs, Rng& rng) {
  if (xs.rows() == 1) {
    VectorXd y(1);
    y(0) = sample_outcome(b, xs.row(0).transpose(), rng);
    return y;
  }
  PosteriorGaussian post = posterior(b, xs);
  post.covariance.diagonal().array() += b.noise_variance();
  const MatrixXd lower = jittered_factor(std::move(post.covariance), kSampleJitter, "sample_outcomes");
  VectorXd z(xs.rows());
  for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return post.mean + lower.triangularView<Eigen::Lower>() * z;
}

}  // namespace gptree
