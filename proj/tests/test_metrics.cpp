#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "gptree/errors.hpp"
#include "gptree/metrics.hpp"
#include "gptree/rng.hpp"

using namespace gptree;

namespace {

std::vector<RunRecord> from_regrets(double r_star, const std::vector<double>& iregrets) {
  std::vector<std::string> ids;
  std::vector<double> ys;
  for (std::size_t i = 0; i < iregrets.size(); ++i) {
    ids.push_back("m" + std::to_string(i));
    ys.push_back(r_star - iregrets[i]);
  }
  return make_records(r_star, ids, ys);
}

}  // namespace

TEST_CASE("instantaneous regret on a 4.6 to 8.0 activity range") {
  CHECK(instantaneous_regret(8.0, 8.0) == 0.0);
  CHECK(instantaneous_regret(8.0, 4.6) == 8.0 - 4.6);
  CHECK(instantaneous_regret(8.0, 4.6) == doctest::Approx(3.4).epsilon(1e-15));
}

TEST_CASE("reward above r_star is a data error") {
  std::vector<std::string> ids = {"a", "b"};
  std::vector<double> ys = {7.0, 8.0 + 1e-9};
  CHECK_THROWS_AS(make_records(8.0, ids, ys), InputError);
}

TEST_CASE("average regret") {
  const auto perfect = from_regrets(8.0, {0.0, 0.0, 0.0});
  CHECK(average_regret(perfect, 3) == 0.0);
  const auto two = from_regrets(8.0, {1.0, 0.0});
  CHECK(average_regret(two, 2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(average_regret(std::vector<RunRecord>{}, 0), InputError);
  CHECK_THROWS_AS(average_regret(two, 3), InputError);
}

TEST_CASE("simple regret") {
  const auto recs = from_regrets(8.0, {3.4, 0.8, 1.2});
  CHECK(simple_regret(recs) == doctest::Approx(0.8));
  CHECK(simple_regret(from_regrets(8.0, {2.0, 0.0, 1.0})) == 0.0);
  CHECK_THROWS_AS(simple_regret(std::vector<RunRecord>{}), InputError);
}

TEST_CASE("running columns") {
  const auto recs = from_regrets(8.0, {3.4, 0.8, 1.2});
  CHECK(recs[0].t == 1);
  CHECK(recs[2].t == 3);
  CHECK(recs[1].running_aregret == doctest::Approx(2.1));
  CHECK(recs[2].best_so_far == doctest::Approx(7.2));
  CHECK(recs[2].running_sregret == doctest::Approx(0.8));
}

TEST_CASE("metric properties over random record lists") {
  Rng rng(1000);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(60);
    const double r_star = 4.6 + 3.4 * rng.uniform();
    std::vector<double> ir(n);
    for (auto& v : ir) v = rng.uniform() < 0.05 ? 0.0 : (r_star - 4.6) * rng.uniform();
    auto recs = from_regrets(r_star, ir);
    const int T = static_cast<int>(n);

    double min_ir = recs.front().iregret;
    double sum = 0.0;
    for (const auto& r : recs) {
      min_ir = std::min(min_ir, r.iregret);
      sum += r.iregret;
      CHECK(r.iregret >= 0.0);
    }
    const double avg = average_regret(recs, T);
    const double simple = simple_regret(recs);
    CHECK(simple == min_ir);
    CHECK(simple <= avg);
    CHECK(simple >= 0.0);
    CHECK(std::abs(avg - sum / T) <= 1e-12);

    for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i].best_so_far >= recs[i - 1].best_so_far);
    CHECK(recs.back().running_aregret == doctest::Approx(avg).epsilon(1e-12));
    CHECK(recs.back().running_sregret == simple);

    for (std::size_t i = recs.size(); i > 1; --i) std::swap(recs[i - 1], recs[rng.uniform_index(i)]);
    CHECK(average_regret(recs, T) == avg);
    CHECK(simple_regret(recs) == simple);
  }
}
