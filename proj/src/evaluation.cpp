#include "mgproto/evaluation.hpp"

#include "mgproto/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mgproto {

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& labels,
                    const FiniteMetric& metric, const EvalOptions& options)
{
  if (predictions.size() != labels.size())
    throw ValidationError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  if (labels.empty())
    throw ValidationError("evaluate: no samples");
  const auto classes = static_cast<int>(metric.size());
  if (!options.leaf_mask.empty() && options.leaf_mask.size() != metric.size())
    throw ValidationError("evaluate: leaf mask does not match the metric");
  auto is_leaf = [&](int c) { return options.leaf_mask.empty() || options.leaf_mask[static_cast<std::size_t>(c)]; };

  EvalReport report;
  report.n = labels.size();
  report.metric = metric;
  report.confusion = Eigen::MatrixXi::Zero(classes, classes);
  double errors = 0.0;
  double cost = 0.0;
  std::size_t leaf_predicted = 0;
  std::size_t leaf_errors = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = predictions[i];
    const int z = labels[i];
    if (y < 0 || y >= classes)
      throw ValidationError("evaluate: unknown predicted class id " + std::to_string(y));
    if (z < 0 || z >= classes)
      throw ValidationError("evaluate: unknown label class id " + std::to_string(z));
    if (!is_leaf(z))
      throw ValidationError("evaluate: label " + metric.names[static_cast<std::size_t>(z)] +
                            " is not a leaf");
    report.confusion(z, y) += 1;
    cost += metric.costs(y, z);
    if (y != z)
      errors += 1.0;
    if (is_leaf(y)) {
      ++leaf_predicted;
      if (y != z)
        ++leaf_errors;
    } else {
      ++report.internal_predictions;
    }
  }
  const double n = static_cast<double>(report.n);
  report.er = errors / n;
  report.ac = cost / n;
  if (options.any_node) {
    report.l_er = report.er;
    report.r_er = leaf_predicted ? static_cast<double>(leaf_errors) / static_cast<double>(leaf_predicted) : 0.0;
  }
  if (options.prototype_coords) {
    const Eigen::MatrixXd& costs = options.prototype_costs ? *options.prototype_costs : metric.costs;
    report.distortion = distortion_report(*options.prototype_coords, costs, options.distance);
  }
  return report;
}

Eigen::MatrixXd class_mean_embeddings(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                                      int classes)
{
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size())
    throw ValidationError("class means: embedding/label count mismatch");
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(classes, embeddings.cols());
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    means.row(labels[i]) += embeddings.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (int k = 0; k < classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0)
      throw ValidationError("class means: class " + std::to_string(k) + " has no sample");
    means.row(k) /= counts[static_cast<std::size_t>(k)];
  }
  return means;
}

std::vector<ConfusionDelta> compare(const EvalReport& a, const EvalReport& b)
{
  if (a.metric.names != b.metric.names)
    throw ValidationError("compare: reports cover different class sets");
  const auto classes = static_cast<int>(a.metric.size());
  std::vector<ConfusionDelta> out;
  for (int k = 0; k < classes; ++k)
    for (int l = k + 1; l < classes; ++l) {
      ConfusionDelta d;
      d.k = k;
      d.l = l;
      d.cost = a.metric.costs(k, l);
      d.count_a = a.confusion(k, l) + a.confusion(l, k);
      d.count_b = b.confusion(k, l) + b.confusion(l, k);
      if (d.count_a == 0)
        d.relative_change = d.count_b == 0 ? 0.0 : std::numeric_limits<double>::infinity();
      else
        d.relative_change = static_cast<double>(d.count_b - d.count_a) / static_cast<double>(d.count_a);
      out.push_back(d);
    }
  std::stable_sort(out.begin(), out.end(), [](const ConfusionDelta& x, const ConfusionDelta& y) {
    return x.relative_change < y.relative_change;
  });
  return out;
}

double aggregate(std::vector<double> values, const std::string& how)
{
  if (values.empty())
    throw ValidationError("aggregate: no values");
  if (how == "mean")
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (how == "median") {
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  }
  throw ValidationError("aggregate: unknown aggregation '" + how + "'");
}

} // namespace mgproto
