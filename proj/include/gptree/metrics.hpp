#pragma once

#include <span>
#include <string>
#include <vector>

namespace gptree {

/// One tested molecule within one replicate.
struct RunRecord {
  int t = 0;
  std::string arm_id;
  double y_observed = 0.0;
  double r_star = 0.0;
  double iregret = 0.0;
  /// Mean of iregret over steps 1..t.
  double running_aregret = 0.0;
  /// Best observed reward over steps 1..t.
  double best_so_far = 0.0;
  /// r_star - best_so_far.
  double running_sregret = 0.0;
};

/// r_star - r.
double instantaneous_regret(double r_star, double r);

/// (1/T) sum_t (r_star - r_t). Throws InputError when records is empty or |records| != T.
double average_regret(std::span<const RunRecord> records, int T);

/// r_star - max_t r_t. Throws InputError when records is empty.
double simple_regret(std::span<const RunRecord> records);

/// Builds records for a sequence of observed rewards. Throws InputError
/// when any reward exceeds r_star, which indicates corrupt data.
std::vector<RunRecord> make_records(double r_star, std::span<const std::string> arm_ids, std::span<const double> ys);

}  // namespace gptree
