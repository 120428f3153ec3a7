#pragma once

#include "mgproto/geometry.hpp"
#include "mgproto/metric_core.hpp"
#include "mgproto/model.hpp"
#include "mgproto/taxonomy.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace mgproto {

/// Exact Euclidean nearest-neighbour index over a snapshot of points.
/// Ties go to the lowest row index. Immutable after construction.
class PrototypeIndex
{
public:
  static constexpr int default_bucket_size = 8;

  /// Throws ValidationError for an empty or non-finite point set.
  explicit PrototypeIndex(const Eigen::MatrixXd& points, int bucket_size = default_bucket_size);

  int nearest(const VectorRef& query) const;
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }

private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Node
  {
    int split_dim = -1;
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  int build(int begin, int end);
  void search(int node, const double* query, int& best, double& best_d2) const;
  double squared_distance(int row, const double* query) const;

  RowMatrix points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int bucket_size_;
};

/// Index over the leaf prototypes; results are leaf indices.
PrototypeIndex build_index(const PrototypeSet& pi);

/// Linear scan with the same distance arithmetic and tie rule as the index.
int nearest_exhaustive(const Eigen::MatrixXd& points, const VectorRef& query);

enum class Scheme { MaxProb, MinExpectedCost, AnyNode };
std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct Prediction
{
  Scheme scheme = Scheme::MaxProb;
  /// Row of the candidate metric (leaf index, or node index for any-node).
  int candidate = 0;
  /// Taxonomy node id, or -1 when unknown.
  int node_id = -1;
  Eigen::VectorXd posterior;
  std::optional<Eigen::VectorXd> expected_costs;
};

/// EC(k) = sum_l posterior_l * costs(k, l); rows are candidates, columns leaves.
Eigen::VectorXd expected_costs(const VectorRef& posterior, const Eigen::MatrixXd& costs);

/// Index of the smallest entry, lowest index on ties.
int argmin(const VectorRef& values);
/// Index of the largest entry, lowest index on ties.
int argmax(const VectorRef& values);

Prediction predict_max_prob(const VectorRef& embedding, const PrototypeIndex& index,
                            const PrototypeSet& pi, const DistanceSpec& spec);

/// Leaf minimizing the expected cost under the prototype posterior.
Prediction predict_min_expected_cost(const VectorRef& embedding, const PrototypeSet& pi,
                                     const DistanceSpec& spec, const FiniteMetric& leaf_costs);

/// Rows (all nodes) by columns (leaves) of an all-node metric.
Eigen::MatrixXd any_node_cost_block(const FiniteMetric& all_nodes, const Taxonomy& tax);

/// Node (leaf or internal) minimizing the expected cost.
Prediction predict_any_node(const VectorRef& embedding, const PrototypeSet& pi,
                            const DistanceSpec& spec, const FiniteMetric& all_nodes,
                            const Taxonomy& tax);

/// Batch predictor for a trained classifier. The candidate metric is the
/// leaf metric, or the all-node metric for the any-node scheme.
class Predictor
{
public:
  Predictor(const Classifier& classifier, const Taxonomy& tax, Scheme scheme, bool use_index = true);

  std::vector<Prediction> predict(const Eigen::MatrixXd& features) const;
  const FiniteMetric& candidate_metric() const { return candidates_; }
  const FiniteMetric& leaf_metric() const { return leaves_; }
  Scheme scheme() const { return scheme_; }

private:
  const Classifier& classifier_;
  Scheme scheme_;
  FiniteMetric leaves_;
  FiniteMetric candidates_;
  /// candidates x leaves
  Eigen::MatrixXd cost_block_;
  std::optional<PrototypeIndex> index_;
};

/// CSV: sample_id,scheme,predicted,top1..top3 (class, probability),expected_cost.
std::string predictions_csv(const std::vector<Prediction>& predictions,
                            const FiniteMetric& candidates, const std::vector<std::string>& leaf_names);

} // namespace mgproto
