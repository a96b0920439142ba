#include <cmath>
#include <memory>

#include "doctest.h"
#include "gptree/errors.hpp"
#include "gptree/linear_ts.hpp"
#include "oracles.hpp"

using namespace gptree;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("initial state") {
  const auto s = lints_init(2, 1.0, 0.1, 100);
  CHECK(s.B == MatrixXd::Identity(2, 2));
  CHECK(s.mu_hat == VectorXd::Zero(2));
  CHECK(s.f == VectorXd::Zero(2));
}

TEST_CASE("scale factor") {
  // sqrt(24 ln 100 * 2 ln 10), evaluated offline
  CHECK(lints_init(2, 1.0, 0.1, 100).v == doctest::Approx(22.560634268697463).epsilon(1e-12));
  CHECK(lints_scale(3.0, 2, 0.1, 100) == doctest::Approx(3.0 * 22.560634268697463).epsilon(1e-12));
}

TEST_CASE("init preconditions") {
  CHECK_THROWS_AS(lints_init(2, 1.0, 0.1, 1), InputError);
  CHECK_THROWS_AS(lints_init(0, 1.0, 0.1, 10), InputError);
  CHECK_THROWS_AS(lints_init(2, 1.0, 1.0, 10), InputError);
  CHECK_THROWS_AS(lints_init(2, 0.0, 0.1, 10), InputError);
}

TEST_CASE("one update from init") {
  auto s = lints_init(3, 1.0, 0.1, 10);
  s = lints_update(s, VectorXd::Unit(3, 0), 1.0);
  CHECK(s.B.diagonal() == VectorXd((VectorXd(3) << 2, 1, 1).finished()));
  CHECK(s.f == VectorXd::Unit(3, 0));
  CHECK(s.mu_hat(0) == doctest::Approx(0.5));
  CHECK(s.mu_hat(1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(lints_update(s, VectorXd::Zero(2), 1.0), InputError);
}

TEST_CASE("zero context leaves the state unchanged") {
  auto s = lints_update(lints_init(2, 1.0, 0.1, 10), VectorXd::Ones(2), 2.0);
  const auto t = lints_update(s, VectorXd::Zero(2), 5.0);
  CHECK(t.B == s.B);
  CHECK(t.f == s.f);
  CHECK((t.mu_hat - s.mu_hat).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("updates commute and keep B positive definite") {
  Rng rng(21);
  auto s0 = lints_init(4, 1.0, 0.1, 10);
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(oracle::random_vector(rng, 4));
    ys.push_back(rng.normal());
  }
  auto a = s0, b = s0;
  for (int i = 0; i < 12; ++i) {
    a = lints_update(a, xs[i], ys[i]);
    b = lints_update(b, xs[11 - i], ys[11 - i]);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a.B);
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-8);
    CHECK((a.B * a.mu_hat - a.f).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK((a.B - b.B).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.f - b.f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("step edge cases") {
  Rng rng(1);
  auto s = lints_init(2, 1.0, 0.1, 10);
  auto one = std::make_shared<const MatrixXd>(MatrixXd::Ones(1, 2));
  CHECK(lints_step(s, ArmSet::all(one), rng) == 0);

  s.v = 0.0;
  auto many = std::make_shared<const MatrixXd>(MatrixXd::Random(5, 2));
  CHECK(lints_step(s, ArmSet::all(many), rng) == 0);
  CHECK(lints_step(s, ArmSet::all(many).without({0, 1}), rng) == 2);

  auto wrong = std::make_shared<const MatrixXd>(MatrixXd::Ones(3, 3));
  CHECK_THROWS_AS(lints_step(s, ArmSet::all(wrong), rng), InputError);
}

TEST_CASE("with zero scale the step is greedy") {
  Rng rng(5);
  auto s = lints_init(3, 1.0, 0.1, 10);
  for (int i = 0; i < 6; ++i) s = lints_update(s, oracle::random_vector(rng, 3), rng.normal());
  s.v = 0.0;
  auto feats = std::make_shared<const MatrixXd>(oracle::random_matrix(rng, 40, 3));
  const ArmSet arms = ArmSet::all(feats);
  Eigen::Index best = 0;
  (*feats * s.mu_hat).maxCoeff(&best);
  CHECK(lints_step(s, arms, rng) == static_cast<std::size_t>(best));
}

TEST_CASE("sampled means have covariance v^2 B^-1") {
  Rng rng(8);
  auto s = lints_init(3, 0.1, 0.1, 10);
  for (int i = 0; i < 5; ++i) s = lints_update(s, oracle::random_vector(rng, 3), rng.normal());
  const int n = 20000;
  MatrixXd draws(n, 3);
  for (int i = 0; i < n; ++i) draws.row(i) = lints_sample_mean(s, rng).transpose();
  const MatrixXd want = s.v * s.v * s.B.inverse();
  const MatrixXd emp = oracle::sample_covariance(draws);
  const double rel = (emp - want).operatorNorm() / want.operatorNorm();
  CHECK(rel < 0.05);
  CHECK(((draws.colwise().mean().transpose() - s.mu_hat).array().abs() < 5.0 * (want.diagonal().array() / n).sqrt()).all());
}
