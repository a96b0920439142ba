#include "gptree/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "gptree/errors.hpp"
#include "gptree/rng.hpp"

namespace gptree {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> parse_real(const std::string& text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void data_error(const std::string& name, std::size_t line, const std::string& msg) {
  throw InputError(name + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kReal:
      return "real";
    case Provenance::kProjected:
      return "projected";
    case Provenance::kSynthetic:
      return "synthetic";
  }
  return "real";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "real") return Provenance::kReal;
  if (s == "projected") return Provenance::kProjected;
  if (s == "synthetic") return Provenance::kSynthetic;
  throw InputError("unknown provenance '" + s + "'");
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

void Dataset::validate() const {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (features.rows() != n || targets.size() != n) {
    throw InputError("dataset '" + name + "': ids, features and targets differ in length");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw InputError("dataset '" + name + "': duplicate id '" + id + "'");
  }
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset load_dataset(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  return parse_dataset(in, std::filesystem::path(path).stem().string(), opts);
}

Dataset parse_dataset(std::istream& in, const std::string& name, const LoadOptions& opts) {
  Dataset ds;
  ds.name = name;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string meta = trim(std::string_view(t).substr(1));
      const auto eq = meta.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(meta).substr(0, eq));
      const std::string value = trim(std::string_view(meta).substr(eq + 1));
      if (key == "y_range") {
        const auto parts = split(value, ',');
        std::optional<double> lo, hi;
        if (parts.size() == 2) {
          lo = parse_real(parts[0]);
          hi = parse_real(parts[1]);
        }
        if (!lo || !hi || *lo > *hi) data_error(name, lineno, "malformed y_range '" + value + "'");
        ds.y_range = std::make_pair(*lo, *hi);
      } else if (key == "provenance") {
        ds.provenance = provenance_from_string(value);
      }
      continue;
    }
    header = split(t, ',');
    break;
  }
  if (header.size() < 3 || header[0] != "id" || header[1] != "y") {
    data_error(name, lineno, "header must be 'id,y,f1,...,fd'");
  }
  const std::size_t d = header.size() - 2;
  std::vector<double> values;
  std::vector<double> targets;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split(t, ',');
    if (cells.size() != header.size()) {
      data_error(name, lineno,
                 "row has " + std::to_string(cells.size()) + " columns, header has " + std::to_string(header.size()));
    }
    if (cells[0].empty()) data_error(name, lineno, "empty id");
    if (!seen.insert(cells[0]).second) data_error(name, lineno, "duplicate id '" + cells[0] + "'");
    double y = std::numeric_limits<double>::quiet_NaN();
    if (!cells[1].empty() || !opts.allow_missing_targets) {
      const auto parsed = parse_real(cells[1]);
      if (!parsed) data_error(name, lineno, "column 'y': non-numeric value '" + cells[1] + "'");
      y = *parsed;
      if (ds.y_range && (y < ds.y_range->first || y > ds.y_range->second)) {
        data_error(name, lineno, "column 'y': value " + cells[1] + " outside declared y_range");
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = parse_real(cells[j + 2]);
      if (!v) data_error(name, lineno, "column '" + header[j + 2] + "': non-numeric value '" + cells[j + 2] + "'");
      values.push_back(*v);
    }
    ds.ids.push_back(cells[0]);
    targets.push_back(y);
  }
  const auto n = static_cast<Eigen::Index>(ds.ids.size());
  if (n == 0) throw InputError(name + ": dataset has no rows");
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Eigen::Index>(d));
  ds.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
  return ds;
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  ds.validate();
  if (ds.y_range) out << "# y_range=" << format_real(ds.y_range->first) << ',' << format_real(ds.y_range->second) << '\n';
  out << "# provenance=" << to_string(ds.provenance) << '\n';
  out << "id,y";
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ",f" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << ds.ids[i] << ',';
    if (std::isfinite(ds.targets(r))) out << format_real(ds.targets(r));
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ',' << format_real(ds.features(r, j));
    out << '\n';
  }
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write dataset '" + path + "'");
  write_dataset(ds, out);
  if (!out) throw InputError("write failed for '" + path + "'");
}

int descriptor_height(const std::string& token) {
  if (token.empty()) throw InputError("empty descriptor token");
  std::vector<char> stack;
  int height = 0;
  for (char c : token) {
    if (c == '[' || c == '(') {
      stack.push_back(c);
      if (c == '(') {
        const int parens = static_cast<int>(std::count(stack.begin(), stack.end(), '('));
        height = std::max(height, parens);
      }
    } else if (c == ']' || c == ')') {
      const char open = c == ']' ? '[' : '(';
      if (stack.empty() || stack.back() != open) throw InputError("unbalanced brackets in descriptor '" + token + "'");
      stack.pop_back();
    }
  }
  if (!stack.empty()) throw InputError("unbalanced brackets in descriptor '" + token + "'");
  return height;
}

DescriptorTable load_descriptors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open descriptor file '" + path + "'");
  return parse_descriptors(in);
}

DescriptorTable parse_descriptors(std::istream& in) {
  DescriptorTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) data_error("descriptors", lineno, "expected 'id<TAB>y<TAB>tokens'");
    DescriptorEntry e;
    e.id = fields[0];
    const auto y = parse_real(fields[1]);
    if (!y) data_error("descriptors", lineno, "non-numeric y '" + fields[1] + "'");
    e.y = *y;
    std::istringstream tokens(fields[2]);
    std::string tok;
    while (tokens >> tok) {
      descriptor_height(tok);
      e.tokens.push_back(tok);
    }
    if (e.tokens.empty()) data_error("descriptors", lineno, "molecule '" + e.id + "' has no tokens");
    table.molecules.push_back(std::move(e));
  }
  return table;
}

DescriptorFeatures vectorize_descriptors(const DescriptorTable& table) {
  if (table.molecules.empty()) throw InputError("vectorize_descriptors: empty corpus");
  std::map<std::string, Eigen::Index> columns;
  for (const auto& m : table.molecules) {
    for (const auto& tok : m.tokens) {
      descriptor_height(tok);
      columns.emplace(tok, 0);
    }
  }
  DescriptorFeatures out;
  Eigen::Index next = 0;
  for (auto& [tok, col] : columns) {
    col = next++;
    out.vocabulary.push_back(tok);
  }
  out.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.molecules.size()), next);
  for (std::size_t i = 0; i < table.molecules.size(); ++i) {
    for (const auto& tok : table.molecules[i].tokens) out.counts(static_cast<Eigen::Index>(i), columns.at(tok)) += 1.0;
  }
  return out;
}

Dataset dataset_from_descriptors(const DescriptorTable& table, const std::string& name) {
  Dataset ds;
  ds.name = name;
  ds.features = vectorize_descriptors(table).counts;
  ds.targets.resize(static_cast<Eigen::Index>(table.molecules.size()));
  for (std::size_t i = 0; i < table.molecules.size(); ++i) {
    ds.ids.push_back(table.molecules[i].id);
    ds.targets(static_cast<Eigen::Index>(i)) = table.molecules[i].y;
  }
  ds.validate();
  return ds;
}

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() == 0) throw InputError("Standardizer::fit: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - s.mean;
  const double n = static_cast<double>(rows.rows());
  s.scale = (centered.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& rows) const {
  if (rows.cols() != mean.size()) throw InputError("Standardizer::apply: dimension mismatch");
  return (rows.rowwise() - mean).array().rowwise() / scale.array();
}

Dataset generate_synthetic(const Dataset& source, int n_points, std::uint64_t seed, const KernelSpec& kernel,
                           double noise) {
  if (n_points < 1) throw InputError("generate_synthetic: n_points must be >= 1");
  if (source.size() == 0) throw InputError("generate_synthetic: empty source dataset");
  if (!source.has_targets()) throw InputError("generate_synthetic: source targets must all be known");
  source.validate();

  const Standardizer standard = Standardizer::fit(source.features);
  const double prior_mean = source.targets.mean();
  const GpBelief belief =
      GpBelief::fit(kernel, noise, standard.apply(source.features), source.targets, prior_mean);

  const Eigen::RowVectorXd sd =
      ((source.features.rowwise() - standard.mean).colwise().squaredNorm() / static_cast<double>(source.size()))
          .cwiseSqrt();
  Rng rng(seed);
  const Eigen::Index d = source.dim();
  Eigen::MatrixXd candidates(n_points, d);
  for (Eigen::Index r = 0; r < n_points; ++r) {
    const auto i = static_cast<Eigen::Index>(rng.uniform_index(source.size()));
    const auto j = static_cast<Eigen::Index>(rng.uniform_index(source.size()));
    const double lambda = rng.uniform();
    candidates.row(r) = lambda * source.features.row(i) + (1.0 - lambda) * source.features.row(j);
    for (Eigen::Index c = 0; c < d; ++c) candidates(r, c) += 0.05 * sd(c) * rng.normal();
  }

  Dataset out;
  out.name = source.name + "-synthetic";
  out.provenance = Provenance::kSynthetic;
  out.features = candidates;
  out.targets = sample_function_values(belief, standard.apply(candidates), rng);
  out.ids.reserve(static_cast<std::size_t>(n_points));
  for (int r = 0; r < n_points; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "syn%06d", r + 1);
    out.ids.emplace_back(buf);
  }
  return out;
}

Dataset generate_descriptor_analog(int n_points, int dim, std::uint64_t seed, double y_lo, double y_hi) {
  if (n_points < 2 || dim < 1) throw InputError("generate_descriptor_analog: need n_points >= 2 and dim >= 1");
  if (!(y_lo < y_hi)) throw InputError("generate_descriptor_analog: y_lo must be below y_hi");
  Rng rng(seed);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_points, dim);
  for (Eigen::Index i = 0; i < n_points; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (rng.uniform() < 0.1) counts(i, j) = 1.0 + static_cast<double>(rng.uniform_index(4));
    }
  }
  KernelSpec k;
  k.lengthscale = std::sqrt(static_cast<double>(dim));
  const GpBelief prior(k, 0.0);
  const Eigen::VectorXd f = sample_function_values(prior, Standardizer::fit(counts).apply(counts), rng);
  const double lo = f.minCoeff();
  const double hi = f.maxCoeff();
  Dataset ds;
  ds.name = "analog";
  ds.features = std::move(counts);
  ds.targets = (hi > lo) ? Eigen::VectorXd(((f.array() - lo) / (hi - lo)) * (y_hi - y_lo) + y_lo)
                         : Eigen::VectorXd::Constant(n_points, y_lo);
  ds.targets = ds.targets.cwiseMax(y_lo).cwiseMin(y_hi);
  ds.y_range = std::make_pair(y_lo, y_hi);
  for (int i = 0; i < n_points; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mol%05d", i + 1);
    ds.ids.emplace_back(buf);
  }
  return ds;
}

}  // namespace gptree
