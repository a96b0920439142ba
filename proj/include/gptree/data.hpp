#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gptree/gp.hpp"

namespace gptree {

enum class Provenance { kReal, kProjected, kSynthetic };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Candidate molecules with features (one row each) and true rewards
/// (-log IC50). Targets may be NaN only for campaign candidate files whose
/// outcomes are not known yet.
struct Dataset {
  std::string name;
  std::vector<std::string> ids;
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  Provenance provenance = Provenance::kReal;
  /// Declared target range from the `# y_range=lo,hi` header line.
  std::optional<std::pair<double, double>> y_range;

  std::size_t size() const { return ids.size(); }
  Eigen::Index dim() const { return features.cols(); }
  bool has_targets() const { return targets.size() > 0 && targets.allFinite(); }
  /// Row index of `id`, or nullopt.
  std::optional<std::size_t> find(const std::string& id) const;
  /// Throws InputError on size mismatches or duplicate ids.
  void validate() const;
};

struct LoadOptions {
  /// Accept empty `y` cells (stored as NaN).
  bool allow_missing_targets = false;
};

/// CSV: optional `# key=value` metadata lines (y_range, provenance), then
/// header `id,y,f1,...,fd`, then one row per molecule.
Dataset load_dataset(const std::string& path, const LoadOptions& opts = {});
Dataset parse_dataset(std::istream& in, const std::string& name, const LoadOptions& opts = {});
void save_dataset(const Dataset& ds, const std::string& path);
void write_dataset(const Dataset& ds, std::ostream& out);

/// Shortest round-trip decimal form used by every file writer.
std::string format_real(double v);

/// Signature descriptor tokens per molecule.
struct DescriptorEntry {
  std::string id;
  double y = 0.0;
  std::vector<std::string> tokens;
};

struct DescriptorTable {
  std::vector<DescriptorEntry> molecules;
};

/// Nesting height of a signature token: "[C]" is 0, "[C]([C]=[C])" is 1.
/// Throws InputError for empty or unbalanced tokens.
int descriptor_height(const std::string& token);

/// One molecule per line: `id<TAB>y<TAB>token token ...`.
DescriptorTable load_descriptors(const std::string& path);
DescriptorTable parse_descriptors(std::istream& in);

struct DescriptorFeatures {
  /// Sorted distinct tokens across the corpus.
  std::vector<std::string> vocabulary;
  /// Token counts, one row per molecule, columns in vocabulary order.
  Eigen::MatrixXd counts;
};

DescriptorFeatures vectorize_descriptors(const DescriptorTable& table);

/// Dataset built from a descriptor table via vectorize_descriptors.
Dataset dataset_from_descriptors(const DescriptorTable& table, const std::string& name);

/// Per-column affine map to zero mean and unit variance. Constant columns
/// are centered only.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& rows);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& rows) const;
};

/// Synthetic candidates from a GP fitted on `source`.
///
/// The GP sees standardized source features (statistics frozen from the
/// source) and has prior mean equal to the source target mean. Each
/// candidate is lambda * x_i + (1 - lambda) * x_j for uniformly drawn source
/// rows i, j and lambda ~ U[0, 1), plus N(0, (0.05 sd_c)^2) jitter per column c.
/// Targets are one joint posterior draw of f at all candidates.
Dataset generate_synthetic(const Dataset& source, int n_points, std::uint64_t seed, const KernelSpec& kernel,
                           double noise);

/// Descriptor-count stand-in for a proprietary screening set.
///
/// Each of `dim` count columns is nonzero with probability 0.1, with counts
/// uniform on {1..4}. Targets are one draw from a zero-mean GP prior with an
/// RBF kernel of lengthscale sqrt(dim) on the standardized counts, mapped
/// affinely onto [y_lo, y_hi].
Dataset generate_descriptor_analog(int n_points, int dim, std::uint64_t seed, double y_lo, double y_hi);

}  // namespace gptree
