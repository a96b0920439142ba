#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "gptree/data.hpp"
#include "gptree/errors.hpp"

using namespace gptree;
namespace fs = std::filesystem;

namespace {

// Height-0 and height-1 signature tokens of paracetamol, one per atom.
const char* kParacetamol =
    "paracetamol\t5.0\t[C] [C] [C] [C] [C] [C] [C] [C] [O] [N] [O] "
    "[C]([C]=[C]) [C]([C]=[C]) [C]([C]=[C][N]) [C]([C]=[C][O]) [C]([C]=[C]) [C]([C]=[C]) [C]([C]) "
    "[C]([C][N]=[O]) [O](=[C]) [N]([C][C]) [O]([C])\n";

double count_of(const DescriptorFeatures& f, Eigen::Index row, const std::string& tok) {
  for (std::size_t j = 0; j < f.vocabulary.size(); ++j) {
    if (f.vocabulary[j] == tok) return f.counts(row, static_cast<Eigen::Index>(j));
  }
  return 0.0;
}

Dataset parse(const std::string& text, LoadOptions opts = {}) {
  std::istringstream in(text);
  return parse_dataset(in, "t", opts);
}

}  // namespace

TEST_CASE("well-formed csv") {
  const auto ds = parse("id,y,f1,f2\na,1.5,0,1\nb,2.5,1,0\nc,-1,0.5,0.25\n");
  CHECK(ds.size() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.ids[2] == "c");
  CHECK(ds.targets(1) == 2.5);
  CHECK(ds.features(2, 1) == 0.25);
  CHECK(ds.provenance == Provenance::kReal);
  CHECK(ds.find("b") == std::optional<std::size_t>(1));
  CHECK_FALSE(ds.find("z"));
}

TEST_CASE("malformed csv rows cite the line") {
  try {
    parse("id,y,f1,f2\na,1,0,1\nb,2,1\n");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("id,y,f1\na,x,1\n"), InputError);
  CHECK_THROWS_AS(parse("id,y,f1\na,1,oops\n"), InputError);
  CHECK_THROWS_AS(parse("id,y,f1\na,1,1\na,2,2\n"), InputError);
  CHECK_THROWS_AS(parse("name,y,f1\na,1,1\n"), InputError);
  CHECK_THROWS_AS(parse("id,y,f1\n"), InputError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv"), InputError);
}

TEST_CASE("declared target range is enforced") {
  const std::string ok = "# y_range=4.6,8.0\nid,y,f1\na,4.6,1\nb,8.0,2\n";
  CHECK(parse(ok).y_range == std::make_pair(4.6, 8.0));
  CHECK_THROWS_AS(parse("# y_range=4.6,8.0\nid,y,f1\na,8.1,1\n"), InputError);
  CHECK_THROWS_AS(parse("# y_range=4.6,8.0\nid,y,f1\na,4.5,1\n"), InputError);
  CHECK(parse("id,y,f1\na,100,1\n").targets(0) == 100.0);
}

TEST_CASE("missing targets only when allowed") {
  CHECK_THROWS_AS(parse("id,y,f1\na,,1\n"), InputError);
  LoadOptions opts;
  opts.allow_missing_targets = true;
  const auto ds = parse("id,y,f1\na,,1\nb,2,3\n", opts);
  CHECK(std::isnan(ds.targets(0)));
  CHECK_FALSE(ds.has_targets());
}

TEST_CASE("save then load is the identity") {
  Dataset ds;
  ds.name = "rt";
  ds.ids = {"x1", "x2", "x3"};
  ds.features = Eigen::MatrixXd(3, 2);
  ds.features << 0.1, 1.0 / 3.0, -2e-17, 12345.678901234567, std::nextafter(1.0, 2.0), -0.0;
  ds.targets = Eigen::VectorXd(3);
  ds.targets << 5.1, 7.999999999999999, 4.6;
  ds.provenance = Provenance::kProjected;
  ds.y_range = std::make_pair(4.6, 8.0);
  const fs::path path = fs::temp_directory_path() / "gptree_roundtrip.csv";
  save_dataset(ds, path.string());
  const auto back = load_dataset(path.string());
  CHECK(back.ids == ds.ids);
  CHECK(back.features == ds.features);
  CHECK(back.targets == ds.targets);
  CHECK(back.provenance == Provenance::kProjected);
  CHECK(back.y_range == ds.y_range);
  fs::remove(path);
}

TEST_CASE("descriptor heights") {
  CHECK(descriptor_height("[C]") == 0);
  CHECK(descriptor_height("[C]([C]=[C])") == 1);
  CHECK(descriptor_height("[C]([C]([C]))") == 2);
  CHECK_THROWS_AS(descriptor_height(""), InputError);
  CHECK_THROWS_AS(descriptor_height("[C]([C]"), InputError);
  CHECK_THROWS_AS(descriptor_height("[C)"), InputError);
}

TEST_CASE("paracetamol token counts") {
  std::istringstream in(kParacetamol);
  const auto table = parse_descriptors(in);
  REQUIRE(table.molecules.size() == 1);
  const auto f = vectorize_descriptors(table);
  CHECK(count_of(f, 0, "[C]") == 8);
  CHECK(count_of(f, 0, "[O]") == 2);
  CHECK(count_of(f, 0, "[N]") == 1);
  CHECK(count_of(f, 0, "[C]([C]=[C])") == 4);
  CHECK(f.counts.sum() == 22);
  CHECK(static_cast<std::size_t>(f.counts.cols()) == f.vocabulary.size());
  CHECK(std::is_sorted(f.vocabulary.begin(), f.vocabulary.end()));
}

TEST_CASE("vectorization edge cases") {
  std::istringstream one("m\t1\t[S] [S] [S]\n");
  const auto f1 = vectorize_descriptors(parse_descriptors(one));
  CHECK(f1.counts.cols() == 1);
  CHECK(f1.counts(0, 0) == 3);

  std::istringstream two("a\t1\t[C] [O]\nb\t2\t[N] [S]([N])\n");
  const auto table = parse_descriptors(two);
  const auto f2 = vectorize_descriptors(table);
  CHECK(f2.counts.row(0).dot(f2.counts.row(1)) == 0.0);
  // the corpus order does not change the vocabulary
  DescriptorTable rev = table;
  std::swap(rev.molecules[0], rev.molecules[1]);
  CHECK(vectorize_descriptors(rev).vocabulary == f2.vocabulary);

  const auto ds = dataset_from_descriptors(table, "d");
  CHECK(ds.ids == std::vector<std::string>{"a", "b"});
  CHECK(ds.targets(1) == 2.0);

  std::istringstream bad("a\t1\t[C]([O]\n");
  CHECK_THROWS_AS(parse_descriptors(bad), InputError);
  std::istringstream nan_y("a\tx\t[C]\n");
  CHECK_THROWS_AS(parse_descriptors(nan_y), InputError);
  CHECK_THROWS_AS(vectorize_descriptors(DescriptorTable{}), InputError);
}

TEST_CASE("standardizer") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto s = Standardizer::fit(x);
  const auto z = s.apply(x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(0).squaredNorm() / 4 == doctest::Approx(1.0));
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synthetic datasets") {
  Rng rng(3);
  Dataset src;
  src.name = "src";
  src.features = Eigen::MatrixXd(30, 3);
  src.targets = Eigen::VectorXd(30);
  for (int i = 0; i < 30; ++i) {
    src.ids.push_back("s" + std::to_string(i));
    for (int j = 0; j < 3; ++j) src.features(i, j) = rng.normal();
    src.targets(i) = 6.0 + std::sin(src.features(i, 0)) + 0.3 * src.features(i, 1);
  }
  KernelSpec k;
  k.lengthscale = 1.5;
  const double noise = 0.1;
  const auto a = generate_synthetic(src, 200, 9, k, noise);
  const auto b = generate_synthetic(src, 200, 9, k, noise);
  CHECK(a.features == b.features);
  CHECK(a.targets == b.targets);
  CHECK(a.ids == b.ids);
  CHECK(a.provenance == Provenance::kSynthetic);
  CHECK(a.size() == 200);
  CHECK(generate_synthetic(src, 200, 10, k, noise).targets != a.targets);

  const double slack = 3.0 * (std::sqrt(k.signal_variance) + std::sqrt(noise));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = generate_synthetic(src, 200, seed, k, noise);
    CHECK(s.targets.minCoeff() >= src.targets.minCoeff() - slack);
    CHECK(s.targets.maxCoeff() <= src.targets.maxCoeff() + slack);
  }
  CHECK_THROWS_AS(generate_synthetic(src, 0, 1, k, noise), InputError);
}

TEST_CASE("descriptor analog") {
  const auto a = generate_descriptor_analog(50, 20, 4, 4.6, 8.0);
  CHECK(a.size() == 50);
  CHECK(a.dim() == 20);
  CHECK(a.targets.minCoeff() == doctest::Approx(4.6));
  CHECK(a.targets.maxCoeff() == doctest::Approx(8.0));
  CHECK(((a.features.array() == 0) || (a.features.array() >= 1 && a.features.array() <= 4)).all());
  CHECK(generate_descriptor_analog(50, 20, 4, 4.6, 8.0).targets == a.targets);
  CHECK_THROWS_AS(generate_descriptor_analog(50, 20, 4, 8.0, 4.6), InputError);
}
