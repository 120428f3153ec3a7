#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgproto {

struct TaxonomyNode
{
  std::string name;
  std::optional<int> parent;
  /// Weight of the edge to the parent; unused for the root.
  double weight = 1.0;
};

/// Rooted tree of class nodes. Node ids are positions in document order.
/// Instances are always validated: one root, acyclic, unique names.
class Taxonomy
{
public:
  /// Validates and builds. Throws ValidationError on duplicate names,
  /// orphan parents, cycles, multiple roots or an empty node list.
  static Taxonomy from_nodes(std::vector<TaxonomyNode> nodes);

  std::size_t size() const { return nodes_.size(); }
  const TaxonomyNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<TaxonomyNode>& nodes() const { return nodes_; }

  int root() const { return root_; }
  bool is_leaf(int id) const { return is_leaf_.at(static_cast<std::size_t>(id)); }
  /// Leaf ids in document order.
  const std::vector<int>& leaves() const { return leaves_; }
  const std::vector<int>& children(int id) const { return children_.at(static_cast<std::size_t>(id)); }
  /// Number of edges between the node and the root.
  int depth(int id) const { return depth_.at(static_cast<std::size_t>(id)); }
  /// Sum of edge weights from the node up to the root.
  double root_distance(int id) const { return root_distance_.at(static_cast<std::size_t>(id)); }

  std::optional<int> find(std::string_view name) const;
  /// Index of a leaf id within leaves(), or nullopt for internal nodes.
  std::optional<int> leaf_index(int id) const;

private:
  std::vector<TaxonomyNode> nodes_;
  std::vector<std::vector<int>> children_;
  std::vector<bool> is_leaf_;
  std::vector<int> leaves_;
  std::vector<int> depth_;
  std::vector<double> root_distance_;
  int root_ = 0;
};

enum class TaxonomyFormat { EdgeList, JsonTree };

/// Parses taxonomy text. Edge lists hold one `child<TAB>parent[<TAB>weight]`
/// line per edge (whitespace separation is accepted when no tab is present);
/// `#` starts a comment. JSON trees are nested `{"name", "children", "weight"}`
/// objects. Node ids follow first appearance in the document.
Taxonomy parse_taxonomy(std::string_view text, TaxonomyFormat format);

/// Guesses the format from the first non-blank character.
Taxonomy parse_taxonomy(std::string_view text);
Taxonomy load_taxonomy(const std::string& path);

/// Symmetric cost matrix over a named class set.
struct FiniteMetric
{
  std::vector<std::string> names;
  /// Taxonomy node id of each row; empty when not derived from a taxonomy.
  std::vector<int> node_ids;
  Eigen::MatrixXd costs;

  std::size_t size() const { return names.size(); }
  double operator()(Eigen::Index k, Eigen::Index l) const { return costs(k, l); }
};

enum class NodeSelection { LeavesOnly, AllNodes };

/// Shortest-path (tree path) costs between the selected nodes, in document
/// order. Throws ValidationError for LeavesOnly with fewer than two leaves.
FiniteMetric cost_matrix(const Taxonomy& tax, NodeSelection nodes);

struct MetricViolation
{
  enum class Kind { NonZeroDiagonal, Asymmetry, NonPositive, Triangle, NonFinite };
  Kind kind;
  /// Pair (i, j) or triple (i, j, k); for Triangle: D[i,j] + D[j,k] < D[i,k].
  int i = 0;
  int j = 0;
  int k = -1;
};

std::string to_string(MetricViolation::Kind kind);

/// Lists every violated metric axiom. Empty iff the matrix is a finite metric.
/// Throws ValidationError for non-square input.
std::vector<MetricViolation> validate_metric(const Eigen::MatrixXd& costs);

/// CSV with a header row and a leading column of class names.
std::string cost_matrix_csv(const FiniteMetric& metric);

/// Metric over classes where every distinct pair costs 1.
FiniteMetric uniform_metric(std::vector<std::string> names);

} // namespace mgproto
