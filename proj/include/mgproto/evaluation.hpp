#pragma once

#include "mgproto/geometry.hpp"
#include "mgproto/metric_core.hpp"
#include "mgproto/taxonomy.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace mgproto {

struct EvalReport
{
  std::size_t n = 0;
  double er = 0.0;
  double ac = 0.0;
  /// Any-node variants: L-ER counts internal predictions as errors, R-ER is
  /// the error rate over leaf-predicted samples only.
  std::optional<double> l_er;
  std::optional<double> r_er;
  std::size_t internal_predictions = 0;
  std::optional<DistortionReport> distortion;
  /// Counts indexed [true, predicted] over the metric's classes.
  Eigen::MatrixXi confusion;
  FiniteMetric metric;
};

struct EvalOptions
{
  /// Per class of the metric: true for leaves. Empty means all leaves.
  std::vector<bool> leaf_mask;
  /// Report L-ER / R-ER.
  bool any_node = false;
  /// Prototype coordinates and the metric they are compared against.
  std::optional<Eigen::MatrixXd> prototype_coords;
  std::optional<Eigen::MatrixXd> prototype_costs;
  DistanceSpec distance;
};

/// Predictions and labels are row indices of `metric`; labels must be leaves.
EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& labels,
                    const FiniteMetric& metric, const EvalOptions& options = {});

/// Mean embedding of each class; stands in for prototypes of logit heads.
/// Throws ValidationError when a class has no sample.
Eigen::MatrixXd class_mean_embeddings(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                                      int classes);

struct ConfusionDelta
{
  int k = 0;
  int l = 0;
  double cost = 0.0;
  long count_a = 0;
  long count_b = 0;
  /// (count_b - count_a) / count_a; 0 when both are 0, +inf when only a is 0.
  double relative_change = 0.0;
};

/// Per unordered class pair, symmetric confusion counts of both systems and
/// their relative change, most improved first.
std::vector<ConfusionDelta> compare(const EvalReport& a, const EvalReport& b);

/// Mean or median of a sample (median averages the middle pair).
double aggregate(std::vector<double> values, const std::string& how);

} // namespace mgproto
