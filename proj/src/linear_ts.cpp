#include "gptree/linear_ts.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gptree/errors.hpp"

namespace gptree {

double lints_scale(double R, Eigen::Index d, double delta, int T) {
  const double epsilon = 1.0 / std::log(static_cast<double>(T));
  return R * std::sqrt(24.0 / epsilon * static_cast<double>(d) * std::log(1.0 / delta));
}

LinTSState lints_init(Eigen::Index d, double R, double delta, int T) {
  if (d < 1) throw InputError("lints_init: d must be >= 1");
  if (T < 2) throw InputError("lints_init: horizon T must be >= 2 so that 1/ln T is defined, got " + std::to_string(T));
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("lints_init: delta must lie in (0, 1)");
  if (!(R > 0.0)) throw InputError("lints_init: R must be positive");
  LinTSState s;
  s.d = d;
  s.B = Eigen::MatrixXd::Identity(d, d);
  s.f = Eigen::VectorXd::Zero(d);
  s.mu_hat = Eigen::VectorXd::Zero(d);
  s.R = R;
  s.delta = delta;
  s.horizon = T;
  s.v = lints_scale(R, d, delta, T);
  return s;
}

Eigen::VectorXd lints_sample_mean(const LinTSState& s, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(s.B);
  if (llt.info() != Eigen::Success) throw NumericalError("lints_step: B is not positive definite");
  Eigen::VectorXd z(s.d);
  for (Eigen::Index i = 0; i < s.d; ++i) z(i) = rng.normal();
  // B = L L^T, so L^{-T} z has covariance B^{-1}.
  Eigen::VectorXd w = llt.matrixU().solve(z);
  return s.mu_hat + s.v * w;
}

std::size_t lints_step(const LinTSState& s, const ArmSet& arms, Rng& rng) {
  if (arms.untested.empty()) throw InputError("lints_step: no untested arms");
  if (arms.dim() != s.d) throw InputError("lints_step: arm dimension does not match state");
  const Eigen::VectorXd mu = lints_sample_mean(s, rng);
  std::size_t best = arms.untested.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i : arms.untested) {
    const double score = arms.features->row(static_cast<Eigen::Index>(i)).dot(mu);
    if (score > best_score || (score == best_score && i < best)) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

LinTSState lints_update(const LinTSState& s, const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  if (x.size() != s.d) throw InputError("lints_update: dimension mismatch");
  LinTSState next = s;
  next.B.noalias() += x * x.transpose();
  next.f += y * x;
  next.mu_hat = next.B.llt().solve(next.f);
  return next;
}

}  // namespace gptree
