#include "support.hpp"

#include "mgproto/error.hpp"
#include "mgproto/evaluation.hpp"

#include <doctest.h>

#include <cmath>

using namespace mgproto;

namespace {

FiniteMetric toy_leaves()
{
  return cost_matrix(parse_taxonomy(mgproto::testing::toy_edges, TaxonomyFormat::EdgeList),
                     NodeSelection::LeavesOnly);
}

} // namespace

TEST_CASE("perfect and single-error predictions")
{
  const FiniteMetric D = toy_leaves();
  const EvalReport perfect = evaluate({0, 1, 2, 2}, {0, 1, 2, 2}, D);
  CHECK(perfect.er == 0.0);
  CHECK(perfect.ac == 0.0);
  CHECK(perfect.confusion.trace() == 4);

  const EvalReport one = evaluate({0, 1, 2, 0}, {0, 1, 2, 2}, D);
  CHECK(one.er == 0.25);
  CHECK(one.ac == 1.0);
  CHECK(one.confusion(2, 0) == 1);
  CHECK_FALSE(one.l_er.has_value());

  CHECK_THROWS_AS(evaluate({0}, {0, 1}, D), ValidationError);
  CHECK_THROWS_AS(evaluate({5}, {0}, D), ValidationError);
  CHECK_THROWS_AS(evaluate({}, {}, D), ValidationError);
}

TEST_CASE("random predictions: AC oracle and bounds")
{
  const FiniteMetric D = toy_leaves();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> y(40), z(40);
    for (std::size_t i = 0; i < 40; ++i) {
      y[i] = cls(rng);
      z[i] = trial % 5 == 0 ? y[i] : cls(rng);
    }
    const EvalReport r = evaluate(y, z, D);
    double direct = 0.0;
    for (std::size_t i = 0; i < 40; ++i)
      direct += D(y[i], z[i]);
    CHECK(std::abs(r.ac - direct / 40.0) < 1e-12);
    const double offdiag = (r.confusion.sum() - r.confusion.trace()) / 40.0;
    CHECK(r.er == doctest::Approx(offdiag));
    CHECK((r.ac == 0.0) == (r.er == 0.0));
    CHECK(r.ac <= r.er * 4.0 + 1e-12);
    CHECK(r.ac >= r.er * 2.0 - 1e-12);
  }
}

TEST_CASE("any-node variants")
{
  const Taxonomy tax = parse_taxonomy(mgproto::testing::toy_edges, TaxonomyFormat::EdgeList);
  const FiniteMetric all = cost_matrix(tax, NodeSelection::AllNodes);
  EvalOptions opts;
  opts.any_node = true;
  for (int i = 0; i < 6; ++i)
    opts.leaf_mask.push_back(tax.is_leaf(i));
  const int a1 = 0, A = 1, a2 = 2, b1 = 3;
  // Two correct leaves, one wrong leaf, one internal prediction.
  const EvalReport r = evaluate({a1, a2, b1, A}, {a1, a2, a1, a2}, all, opts);
  CHECK(r.internal_predictions == 1);
  CHECK(*r.l_er == 0.5);
  CHECK(*r.r_er == doctest::Approx(1.0 / 3.0));
  CHECK(r.ac == doctest::Approx((0 + 0 + 4 + 1) / 4.0));

  const EvalReport leaves_only = evaluate({a1, a2, b1}, {a1, a2, a1}, all, opts);
  CHECK(*leaves_only.l_er == leaves_only.er);
  CHECK(*leaves_only.r_er == leaves_only.er);
  CHECK_THROWS_AS(evaluate({a1}, {A}, all, opts), ValidationError);
}

TEST_CASE("distortion diagnostics in reports")
{
  const FiniteMetric D = toy_leaves();
  EvalOptions opts;
  Eigen::MatrixXd protos(3, 2);
  protos << 0, 0, 2, 0, 1, 3.873;
  opts.prototype_coords = protos;
  const EvalReport r = evaluate({0, 1, 2}, {0, 1, 2}, D, opts);
  REQUIRE(r.distortion.has_value());
  CHECK(r.distortion->pair_count == 3);
  CHECK(r.distortion->scale_free_distortion < 1e-3);
}

TEST_CASE("class means")
{
  Eigen::MatrixXd e(4, 2);
  e << 0, 0, 2, 2, 10, 0, 12, 0;
  const Eigen::MatrixXd m = class_mean_embeddings(e, {0, 0, 1, 1}, 2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 0) == 11.0);
  CHECK_THROWS_AS(class_mean_embeddings(e, {0, 0, 0, 0}, 2), ValidationError);
}

TEST_CASE("compare")
{
  const FiniteMetric D = toy_leaves();
  EvalReport a, b;
  a.metric = b.metric = D;
  a.confusion = Eigen::MatrixXi::Zero(3, 3);
  b.confusion = Eigen::MatrixXi::Zero(3, 3);
  a.confusion(0, 1) = 6;
  a.confusion(1, 0) = 4;
  b.confusion(0, 1) = 2;
  a.confusion(0, 2) = 3;
  b.confusion(2, 0) = 6;

  const auto same = compare(a, a);
  for (const auto& d : same)
    CHECK(d.relative_change == 0.0);

  const auto deltas = compare(a, b);
  REQUIRE(deltas.size() == 3);
  CHECK(deltas[0].k == 0);
  CHECK(deltas[0].l == 1);
  CHECK(deltas[0].relative_change == doctest::Approx(-0.8));
  CHECK(deltas[0].cost == 2.0);
  CHECK(deltas[1].relative_change == 0.0);
  CHECK(deltas[2].relative_change == doctest::Approx(1.0));

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> cnt(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        a.confusion(i, j) = cnt(rng) + 1;
        b.confusion(i, j) = cnt(rng);
      }
    const auto ds = compare(a, b);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& d = ds[i];
      const double ca = a.confusion(d.k, d.l) + a.confusion(d.l, d.k);
      const double cb = b.confusion(d.k, d.l) + b.confusion(d.l, d.k);
      CHECK(d.relative_change == doctest::Approx((cb - ca) / ca));
      if (i > 0)
        CHECK(ds[i - 1].relative_change <= d.relative_change);
    }
  }

  EvalReport c = b;
  c.metric = uniform_metric({"x", "y", "z"});
  CHECK_THROWS_AS(compare(a, c), ValidationError);
}

TEST_CASE("aggregation")
{
  CHECK(aggregate({3, 1, 2}, "median") == 2.0);
  CHECK(aggregate({4, 1, 2, 3}, "median") == 2.5);
  CHECK(aggregate({1, 2, 6}, "mean") == 3.0);
  CHECK_THROWS_AS(aggregate({}, "mean"), ValidationError);
  CHECK_THROWS_AS(aggregate({1}, "mode"), ValidationError);
}
