#pragma once

#include "mgproto/config.hpp"
#include "mgproto/data.hpp"
#include "mgproto/losses.hpp"
#include "mgproto/model.hpp"
#include "mgproto/taxonomy.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mgproto {

struct EpochRecord
{
  int epoch = 0;
  LossBreakdown loss;
  double train_er = 0.0;
  double train_ac = 0.0;
};

struct TrainHistory
{
  std::vector<EpochRecord> epochs;
  /// s* after every optimizer step (disto regularizers only).
  std::vector<double> step_s_star;
};

struct TrainResult
{
  Classifier classifier;
  TrainHistory history;
};

/// Trains an embedding network and its head on `data`. `leaf_costs` is the
/// cost matrix over the taxonomy leaves (label order); the all-node metric
/// for internal prototypes is derived from `tax`. Deterministic for a fixed
/// config seed. Throws NumericError if the loss becomes non-finite.
TrainResult train(const Dataset& data, const Taxonomy& tax, const FiniteMetric& leaf_costs,
                  const TrainConfig& config);

struct PrototypeFitOptions
{
  Regularizer regularizer = Regularizer::Disto;
  DistanceSpec distance;
  int max_steps = 10000;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
};

struct PrototypeFit
{
  Eigen::MatrixXd coords;
  double value = 0.0;
  int steps = 0;
};

/// Minimizes the regularizer alone over prototype coordinates with
/// L-BFGS and a backtracking line search, stopping when the relative improvement
/// falls below the tolerance or after max_steps. The rank objective uses all
/// ordered triplets when there are at most 10^5, otherwise a fixed sample.
PrototypeFit fit_prototypes(const Eigen::MatrixXd& initial, const Eigen::MatrixXd& costs,
                            const PrototypeFitOptions& options);

/// ER and AC of nearest-prototype / argmax predictions on a labeled set.
std::pair<double, double> error_and_cost(const Classifier& classifier, const Dataset& data,
                                         const Eigen::MatrixXd& leaf_costs);

/// CSV with columns epoch,l_data,l_reg,total,s_star,train_er,train_ac.
std::string history_csv(const TrainHistory& history);

} // namespace mgproto
