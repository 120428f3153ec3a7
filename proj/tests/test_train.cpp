#include "support.hpp"

#include "mgproto/data.hpp"
#include "mgproto/error.hpp"
#include "mgproto/metric_core.hpp"
#include "mgproto/train.hpp"

#include <doctest.h>

#include <cmath>

using namespace mgproto;

namespace {

struct Blobs
{
  Taxonomy tax;
  FiniteMetric costs;
  Dataset data;
};

Blobs two_blobs(std::uint64_t seed)
{
  Blobs b{parse_taxonomy("left\troot\nright\troot\n", TaxonomyFormat::EdgeList), {}, {}};
  b.costs = cost_matrix(b.tax, NodeSelection::LeavesOnly);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  b.data.class_names = leaf_names(b.tax);
  b.data.features.resize(80, 2);
  for (int i = 0; i < 80; ++i) {
    const int z = i % 2;
    b.data.labels.push_back(z);
    b.data.features(i, 0) = (z == 0 ? -3.0 : 3.0) + n(rng);
    b.data.features(i, 1) = n(rng);
  }
  return b;
}

TrainConfig small_config()
{
  TrainConfig cfg;
  cfg.embedding_dim = 2;
  cfg.model.hidden = {8};
  cfg.epochs = 50;
  cfg.batch_size = 16;
  cfg.optimizer.lr = 1e-2;
  return cfg;
}

bool same_history(const TrainHistory& a, const TrainHistory& b)
{
  if (a.epochs.size() != b.epochs.size() || a.step_s_star != b.step_s_star)
    return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto &x = a.epochs[i], &y = b.epochs[i];
    if (x.loss.l_data != y.loss.l_data || x.loss.l_reg != y.loss.l_reg || x.loss.total != y.loss.total ||
        x.train_er != y.train_er || x.train_ac != y.train_ac)
      return false;
  }
  return true;
}

} // namespace

TEST_CASE("separable blobs are learned perfectly")
{
  const Blobs b = two_blobs(1);
  for (Head head : {Head::Prototypes, Head::CrossEntropy, Head::SoftLabels}) {
    TrainConfig cfg = small_config();
    cfg.head = head;
    const TrainResult r = train(b.data, b.tax, b.costs, cfg);
    REQUIRE(r.history.epochs.size() == 50);
    CHECK(r.history.epochs.back().train_er == 0.0);
    CHECK(error_and_cost(r.classifier, b.data, b.costs.costs).first == 0.0);
  }
}

TEST_CASE("history records and invariants")
{
  const Blobs b = two_blobs(2);
  TrainConfig cfg = small_config();
  cfg.epochs = 5;
  cfg.lambda = 0.5;
  const TrainResult r = train(b.data, b.tax, b.costs, cfg);
  REQUIRE(r.history.epochs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& e = r.history.epochs[i];
    CHECK(e.epoch == static_cast<int>(i) + 1);
    CHECK(e.loss.total == e.loss.l_data + 0.5 * e.loss.l_reg);
    CHECK(e.loss.s_star.has_value());
  }
  CHECK(r.history.step_s_star.size() == 5 * 5);
  const std::string csv = history_csv(r.history);
  CHECK(csv.rfind("epoch,l_data,l_reg,total,s_star,train_er,train_ac\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("lambda zero is the unregularized run")
{
  const Blobs b = two_blobs(3);
  TrainConfig a = small_config();
  a.epochs = 8;
  a.lambda = 0.0;
  a.regularizer = Regularizer::Disto;
  TrainConfig c = a;
  c.lambda = 1.0;
  c.regularizer = Regularizer::None;
  const TrainResult ra = train(b.data, b.tax, b.costs, a);
  const TrainResult rc = train(b.data, b.tax, b.costs, c);
  for (std::size_t i = 0; i < ra.history.epochs.size(); ++i) {
    CHECK(ra.history.epochs[i].loss.l_data == rc.history.epochs[i].loss.l_data);
    CHECK(ra.history.epochs[i].loss.total == rc.history.epochs[i].loss.total);
  }
  CHECK(ra.classifier.prototypes.coords == rc.classifier.prototypes.coords);
}

TEST_CASE("training is deterministic for a fixed seed")
{
  const Blobs b = two_blobs(4);
  TrainConfig cfg = small_config();
  cfg.epochs = 6;
  cfg.seed = 42;
  const TrainResult x = train(b.data, b.tax, b.costs, cfg);
  const TrainResult y = train(b.data, b.tax, b.costs, cfg);
  CHECK(same_history(x.history, y.history));
  CHECK(x.classifier.embedding.parameters() == y.classifier.embedding.parameters());
  cfg.seed = 43;
  const TrainResult z = train(b.data, b.tax, b.costs, cfg);
  CHECK_FALSE(same_history(x.history, z.history));
}

TEST_CASE("hidden prototypes, fixed prototypes and the rank regularizer")
{
  const Taxonomy tax = mgproto::testing::binary_tree(2);
  const FiniteMetric costs = cost_matrix(tax, NodeSelection::LeavesOnly);
  GaussianHierarchyParams gp;
  gp.per_class = 20;
  const Dataset data = gen_hierarchical_gaussians(tax, gp);

  TrainConfig cfg = small_config();
  cfg.epochs = 3;
  cfg.include_internal_prototypes = true;
  TrainResult r = train(data, tax, costs, cfg);
  CHECK(r.classifier.prototypes.count() == 7);
  CHECK(r.classifier.prototypes.leaf_rows.size() == 4);

  cfg.include_internal_prototypes = false;
  cfg.schedule = Schedule::FixedProto;
  r = train(data, tax, costs, cfg);
  const Eigen::MatrixXd frozen = r.classifier.prototypes.coords;
  CHECK(scale_free_distortion(frozen, costs.costs, cfg.distance) < 0.5);
  cfg.epochs = 6;
  CHECK(train(data, tax, costs, cfg).classifier.prototypes.coords == frozen);

  cfg.schedule = Schedule::Joint;
  cfg.regularizer = Regularizer::Rank;
  cfg.epochs = 3;
  r = train(data, tax, costs, cfg);
  CHECK(r.history.epochs.back().loss.l_reg > 0.0);
  CHECK_FALSE(r.history.epochs.back().loss.s_star.has_value());
}

TEST_CASE("divergence is reported")
{
  const Blobs b = two_blobs(5);
  TrainConfig cfg = small_config();
  cfg.optimizer.kind = OptimizerConfig::Kind::Sgd;
  cfg.optimizer.lr = 1e300;
  CHECK_THROWS_WITH_AS(train(b.data, b.tax, b.costs, cfg), doctest::Contains("diverged at epoch"), NumericError);
}

TEST_CASE("invalid configurations")
{
  const Blobs b = two_blobs(6);
  TrainConfig cfg = small_config();
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(train(b.data, b.tax, b.costs, cfg), ValidationError);
  cfg = small_config();
  cfg.model.architecture = Architecture::Identity;
  cfg.embedding_dim = 5;
  CHECK_THROWS_AS(train(b.data, b.tax, b.costs, cfg), ValidationError);
  cfg.embedding_dim = 2;
  CHECK_NOTHROW(train(b.data, b.tax, b.costs, cfg));
}

TEST_CASE("fit_prototypes embeds a chain exactly and a star only approximately in 1-D")
{
  Eigen::MatrixXd chain(3, 3);
  chain << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  std::mt19937_64 rng(7);
  PrototypeFitOptions opts;
  const PrototypeFit fit = fit_prototypes(mgproto::testing::gaussian_matrix(3, 2, rng), chain, opts);
  CHECK(scale_free_distortion(fit.coords, chain, opts.distance) < 1e-6);

  const Eigen::MatrixXd star = 2.0 * (Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4));
  const PrototypeFit star_fit = fit_prototypes(mgproto::testing::gaussian_matrix(4, 1, rng), star, opts);
  const double sfd = scale_free_distortion(star_fit.coords, star, opts.distance);
  CHECK(sfd > 0.0);
  // Best 1-D placement of four points found by brute force over a grid.
  double best = 1e9;
  for (int a = 1; a <= 40; ++a)
    for (int c = a; c <= 40; ++c)
      for (int d = c; d <= 40; ++d) {
        Eigen::MatrixXd x(4, 1);
        x << 0, a, c, d;
        if (a == c && c == d)
          continue;
        best = std::min(best, scale_free_distortion(x, star, opts.distance));
      }
  CHECK(best > 0.0);
  CHECK(sfd > 1e-3);

  opts.regularizer = Regularizer::Rank;
  const Eigen::MatrixXd start = mgproto::testing::gaussian_matrix(3, 2, rng);
  PrototypeFitOptions none = opts;
  none.max_steps = 0;
  const PrototypeFit rank_fit = fit_prototypes(start, chain, opts);
  CHECK(rank_fit.value < fit_prototypes(start, chain, none).value);
  CHECK(rank_fit.steps > 0);
}
