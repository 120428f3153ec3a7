#include "support.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/data.hpp"
#include "mgproto/error.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace mgproto;
using mgproto::testing::scratch_dir;

namespace {

std::string write(const std::filesystem::path& dir, const std::string& name, const std::string& text)
{
  const auto path = (dir / name).string();
  std::ofstream(path) << text;
  return path;
}

} // namespace

TEST_CASE("generator counts, determinism and parameters")
{
  const Taxonomy tax = mgproto::testing::binary_tree(3);
  GaussianHierarchyParams p;
  p.per_class = 100;
  p.seed = 3;
  const Dataset d = gen_hierarchical_gaussians(tax, p);
  CHECK(d.size() == 800);
  CHECK(d.features.cols() == 2);
  std::vector<int> hist(8, 0);
  for (int z : d.labels)
    ++hist[static_cast<std::size_t>(z)];
  for (int h : hist)
    CHECK(h == 100);
  CHECK(d.class_names == leaf_names(tax));

  const Dataset again = gen_hierarchical_gaussians(tax, p);
  CHECK(again.features == d.features);
  CHECK(again.labels == d.labels);
  p.seed = 4;
  CHECK_FALSE(gen_hierarchical_gaussians(tax, p).features == d.features);

  p.dims = 1;
  CHECK_THROWS_AS(gen_hierarchical_gaussians(tax, p), ValidationError);
  p.dims = 2;
  p.per_class = 0;
  CHECK_THROWS_AS(gen_hierarchical_gaussians(tax, p), ValidationError);
}

TEST_CASE("zero decay collapses everything below depth one")
{
  const Taxonomy tax = mgproto::testing::binary_tree(3);
  GaussianHierarchyParams p;
  p.decay = 0.0;
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd means = hierarchical_means(tax, p, rng);
  for (int leaf : tax.leaves()) {
    int top = leaf;
    while (*tax.node(top).parent != tax.root())
      top = *tax.node(top).parent;
    CHECK((means.row(leaf) - means.row(top)).norm() < 1e-12);
    CHECK(means.row(top).norm() == doctest::Approx(p.root_spread));
  }
}

TEST_CASE("leaf means respect the hierarchy on average")
{
  const Taxonomy tax = mgproto::testing::binary_tree(3);
  const FiniteMetric D = cost_matrix(tax, NodeSelection::LeavesOnly);
  GaussianHierarchyParams p;
  p.dims = 4;
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd means = hierarchical_means(tax, p, rng);
    const auto& leaves = tax.leaves();
    for (std::size_t a = 0; a < leaves.size(); ++a)
      for (std::size_t b = a + 1; b < leaves.size(); ++b) {
        const double d = (means.row(leaves[a]) - means.row(leaves[b])).norm();
        if (D(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) < 6.0) {
          intra += d;
          ++n_intra;
        } else {
          inter += d;
          ++n_inter;
        }
      }
  }
  CHECK(intra / n_intra < inter / n_inter);
}

TEST_CASE("csv loading")
{
  const auto dir = scratch_dir("data_csv");
  const std::vector<std::string> names{"cat", "cow"};
  const Dataset d = load_csv(write(dir, "ok.csv", "x0,label,x1\n1.5,cow,2\n-3,cat,4e-1\n"), "label", names);
  CHECK(d.size() == 2);
  CHECK(d.labels == std::vector<int>{1, 0});
  CHECK(d.features(0, 0) == 1.5);
  CHECK(d.features(1, 1) == 0.4);

  CHECK_THROWS_WITH_AS(load_csv(write(dir, "dog.csv", "x,label\n1,cat\n2,dog\n"), "label", names),
                       doctest::Contains("row 2: unknown label 'dog'"), ValidationError);
  CHECK_THROWS_WITH_AS(load_csv(write(dir, "head.csv", "x,label\n"), "label", names),
                       doctest::Contains("empty dataset"), ValidationError);
  CHECK_THROWS_AS(load_csv(write(dir, "nan.csv", "x,label\nabc,cat\n"), "label", names), ParseError);
  CHECK_THROWS_AS(load_csv(write(dir, "nolabel.csv", "x,y\n1,2\n"), "label", names), ValidationError);
  CHECK_THROWS_AS(load_csv(write(dir, "empty.csv", ""), "label", names), ParseError);
  CHECK_THROWS_AS(load_csv(write(dir, "ragged.csv", "x,label\n1\n"), "label", names), ParseError);

  const Dataset features = load_csv(write(dir, "feat.csv", "a,b\n1,2\n3,4\n"), "", names);
  CHECK(features.features.rows() == 2);
  CHECK(features.labels.empty());
}

TEST_CASE("csv round trip")
{
  const auto dir = scratch_dir("data_roundtrip");
  const Taxonomy tax = mgproto::testing::binary_tree(2);
  GaussianHierarchyParams p;
  p.per_class = 5;
  p.dims = 3;
  const Dataset d = gen_hierarchical_gaussians(tax, p);
  const auto path = (dir / "d.csv").string();
  csv::write_file(path, dataset_csv(d));
  const Dataset back = load_csv(path, "label", leaf_names(tax));
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
}

TEST_CASE("csv primitives")
{
  CHECK(csv::split_record("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(csv::escape_field("x,y") == "\"x,y\"");
  CHECK(csv::escape_field("plain") == "plain");
  CHECK(csv::format_number(0.1) == "0.1");
  CHECK(std::stod(csv::format_number(1.0 / 3.0)) == 1.0 / 3.0);
  const csv::Table t = csv::parse("\xEF\xBB\xBFh1,h2\n\n1,2\n");
  CHECK(t.header == std::vector<std::string>{"h1", "h2"});
  CHECK(t.rows.size() == 1);
}

TEST_CASE("stratified split")
{
  Dataset d;
  d.class_names = {"a", "b", "c"};
  d.features.resize(30, 1);
  for (int i = 0; i < 30; ++i) {
    d.features(i, 0) = i;
    d.labels.push_back(i / 10);
  }
  const SplitResult s = split(d, 0.5, 7);
  CHECK(s.train.size() == 15);
  CHECK(s.test.size() == 15);
  for (int c = 0; c < 3; ++c)
    CHECK(std::count(s.test.labels.begin(), s.test.labels.end(), c) == 5);
  CHECK(s.warnings.empty());

  const SplitResult again = split(d, 0.5, 7);
  CHECK(again.test.features == s.test.features);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    Dataset r;
    r.class_names = {"a", "b", "c", "d"};
    const int n = std::uniform_int_distribution<int>(8, 60)(rng);
    r.features.resize(n, 1);
    for (int i = 0; i < n; ++i) {
      r.features(i, 0) = i;
      r.labels.push_back(std::uniform_int_distribution<int>(0, 3)(rng));
    }
    const double frac = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    const SplitResult sr = split(r, frac, static_cast<std::uint64_t>(trial));
    std::multiset<double> seen;
    for (Eigen::Index i = 0; i < sr.train.features.rows(); ++i)
      seen.insert(sr.train.features(i, 0));
    for (Eigen::Index i = 0; i < sr.test.features.rows(); ++i)
      seen.insert(sr.test.features(i, 0));
    REQUIRE(seen.size() == static_cast<std::size_t>(n));
    CHECK(std::set<double>(seen.begin(), seen.end()).size() == static_cast<std::size_t>(n));
  }

  Dataset lonely;
  lonely.class_names = {"a", "b"};
  lonely.features = Eigen::MatrixXd::Zero(4, 1);
  lonely.labels = {0, 0, 0, 1};
  const SplitResult w = split(lonely, 0.5, 1);
  CHECK(w.warnings.size() == 1);
  CHECK(w.train.size() + w.test.size() == 4);
  CHECK_THROWS_AS(split(d, 1.0, 0), ValidationError);
}
