#include "gptree/metrics.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "gptree/errors.hpp"

namespace gptree {

double instantaneous_regret(double r_star, double r) { return r_star - r; }

double average_regret(std::span<const RunRecord> records, int T) {
  if (records.empty()) throw InputError("average_regret: no records");
  if (static_cast<std::size_t>(T) != records.size()) {
    throw InputError("average_regret: expected " + std::to_string(T) + " records, got " +
                     std::to_string(records.size()));
  }
  // summed in sorted order so the result does not depend on record order
  std::vector<double> regrets;
  regrets.reserve(records.size());
  for (const auto& r : records) regrets.push_back(instantaneous_regret(r.r_star, r.y_observed));
  std::sort(regrets.begin(), regrets.end());
  double total = 0.0;
  for (double v : regrets) total += v;
  return total / static_cast<double>(T);
}

double simple_regret(std::span<const RunRecord> records) {
  if (records.empty()) throw InputError("simple_regret: no records");
  double best = records.front().y_observed;
  for (const auto& r : records) best = std::max(best, r.y_observed);
  return records.front().r_star - best;
}

std::vector<RunRecord> make_records(double r_star, std::span<const std::string> arm_ids, std::span<const double> ys) {
  if (arm_ids.size() != ys.size()) throw InputError("make_records: ids and rewards differ in length");
  std::vector<RunRecord> out;
  out.reserve(ys.size());
  double regret_sum = 0.0;
  double best = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    RunRecord rec;
    rec.t = static_cast<int>(i) + 1;
    rec.arm_id = arm_ids[i];
    rec.y_observed = ys[i];
    rec.r_star = r_star;
    rec.iregret = instantaneous_regret(r_star, ys[i]);
    if (rec.iregret < 0.0) {
      throw InputError("negative regret for arm '" + arm_ids[i] + "': reward exceeds r*, data integrity error");
    }
    regret_sum += rec.iregret;
    best = i == 0 ? ys[i] : std::max(best, ys[i]);
    rec.running_aregret = regret_sum / static_cast<double>(rec.t);
    rec.best_so_far = best;
    rec.running_sregret = r_star - best;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace gptree
