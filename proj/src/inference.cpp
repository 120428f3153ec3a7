#include "mgproto/inference.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/error.hpp"
#include "mgproto/losses.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mgproto {

PrototypeIndex::PrototypeIndex(const Eigen::MatrixXd& points, int bucket_size)
    : points_(points), bucket_size_(std::max(1, bucket_size))
{
  if (points.rows() < 1 || points.cols() < 1)
    throw ValidationError("prototype index: need at least one point");
  if (!points.allFinite())
    throw ValidationError("prototype index: non-finite coordinates");
  order_.resize(static_cast<std::size_t>(points.rows()));
  std::iota(order_.begin(), order_.end(), 0);
  build(0, static_cast<int>(order_.size()));
}

int PrototypeIndex::build(int begin, int end)
{
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= bucket_size_)
    return id;

  int best_dim = 0;
  double best_spread = -1.0;
  for (Eigen::Index c = 0; c < points_.cols(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = begin; i < end; ++i) {
      lo = std::min(lo, points_(order_[i], c));
      hi = std::max(hi, points_(order_[i], c));
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(c);
    }
  }
  if (best_spread <= 0.0)
    return id; // all points coincide

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_(a, best_dim);
                     const double pb = points_(b, best_dim);
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_(order_[mid], best_dim);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].split_dim = best_dim;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double PrototypeIndex::squared_distance(int row, const double* query) const
{
  double sum = 0.0;
  const double* p = points_.data() + static_cast<Eigen::Index>(row) * points_.cols();
  for (Eigen::Index c = 0; c < points_.cols(); ++c) {
    const double d = query[c] - p[c];
    sum += d * d;
  }
  return sum;
}

void PrototypeIndex::search(int node_id, const double* query, int& best, double& best_d2) const
{
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int row = order_[i];
      const double d2 = squared_distance(row, query);
      if (d2 < best_d2 || (d2 == best_d2 && row < best)) {
        best_d2 = d2;
        best = row;
      }
    }
    return;
  }
  const double diff = query[node.split_dim] - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  search(near, query, best, best_d2);
  // <= keeps equidistant points on the far side reachable for the tie rule
  if (diff * diff <= best_d2)
    search(far, query, best, best_d2);
}

int PrototypeIndex::nearest(const VectorRef& query) const
{
  if (query.size() != points_.cols())
    throw ValidationError("prototype index: query dimension mismatch");
  const Eigen::VectorXd q = query;
  int best = std::numeric_limits<int>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(0, q.data(), best, best_d2);
  return best;
}

PrototypeIndex build_index(const PrototypeSet& pi)
{
  return PrototypeIndex(pi.leaf_coords());
}

int nearest_exhaustive(const Eigen::MatrixXd& points, const VectorRef& query)
{
  if (points.rows() < 1 || query.size() != points.cols())
    throw ValidationError("nearest: empty point set or dimension mismatch");
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      const double d = query(c) - points(r, c);
      sum += d * d;
    }
    if (sum < best_d2) {
      best_d2 = sum;
      best = static_cast<int>(r);
    }
  }
  return best;
}

std::string to_string(Scheme scheme)
{
  switch (scheme) {
  case Scheme::MaxProb: return "max-prob";
  case Scheme::MinExpectedCost: return "min-ec";
  case Scheme::AnyNode: return "any-node";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name)
{
  if (name == "max-prob")
    return Scheme::MaxProb;
  if (name == "min-ec" || name == "min-expected-cost")
    return Scheme::MinExpectedCost;
  if (name == "any-node")
    return Scheme::AnyNode;
  throw ValidationError("unknown scheme '" + name + "'");
}

Eigen::VectorXd expected_costs(const VectorRef& posterior, const Eigen::MatrixXd& costs)
{
  if (costs.cols() != posterior.size())
    throw ValidationError("expected costs: metric has " + std::to_string(costs.cols()) +
                          " leaf columns, posterior has " + std::to_string(posterior.size()));
  return costs * posterior;
}

int argmin(const VectorRef& values)
{
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values(i) < values(best))
      best = i;
  return static_cast<int>(best);
}

int argmax(const VectorRef& values)
{
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values(i) > values(best))
      best = i;
  return static_cast<int>(best);
}

namespace {

int leaf_node_id(const PrototypeSet& pi, int leaf)
{
  if (pi.node_ids.empty())
    return -1;
  return pi.node_ids[static_cast<std::size_t>(pi.leaf_rows[static_cast<std::size_t>(leaf)])];
}

} // namespace

Prediction predict_max_prob(const VectorRef& embedding, const PrototypeIndex& index,
                            const PrototypeSet& pi, const DistanceSpec& spec)
{
  Prediction p;
  p.scheme = Scheme::MaxProb;
  p.candidate = index.nearest(embedding);
  p.node_id = leaf_node_id(pi, p.candidate);
  p.posterior = posterior(embedding, pi.leaf_coords(), spec);
  return p;
}

Prediction predict_min_expected_cost(const VectorRef& embedding, const PrototypeSet& pi,
                                     const DistanceSpec& spec, const FiniteMetric& leaf_costs)
{
  Prediction p;
  p.scheme = Scheme::MinExpectedCost;
  p.posterior = posterior(embedding, pi.leaf_coords(), spec);
  p.expected_costs = expected_costs(p.posterior, leaf_costs.costs);
  p.candidate = argmin(*p.expected_costs);
  p.node_id = leaf_node_id(pi, p.candidate);
  return p;
}

Eigen::MatrixXd any_node_cost_block(const FiniteMetric& all_nodes, const Taxonomy& tax)
{
  if (all_nodes.size() != tax.size())
    throw ValidationError("any-node: metric covers " + std::to_string(all_nodes.size()) +
                          " nodes, taxonomy has " + std::to_string(tax.size()));
  if (!all_nodes.node_ids.empty())
    for (std::size_t i = 0; i < all_nodes.node_ids.size(); ++i)
      if (all_nodes.node_ids[i] != static_cast<int>(i))
        throw ValidationError("any-node: metric rows are not in taxonomy node order");
  const auto& leaves = tax.leaves();
  Eigen::MatrixXd block(all_nodes.costs.rows(), static_cast<Eigen::Index>(leaves.size()));
  for (std::size_t l = 0; l < leaves.size(); ++l)
    block.col(static_cast<Eigen::Index>(l)) = all_nodes.costs.col(leaves[l]);
  return block;
}

Prediction predict_any_node(const VectorRef& embedding, const PrototypeSet& pi,
                            const DistanceSpec& spec, const FiniteMetric& all_nodes,
                            const Taxonomy& tax)
{
  const Eigen::MatrixXd block = any_node_cost_block(all_nodes, tax);
  Prediction p;
  p.scheme = Scheme::AnyNode;
  p.posterior = posterior(embedding, pi.leaf_coords(), spec);
  p.expected_costs = expected_costs(p.posterior, block);
  p.candidate = argmin(*p.expected_costs);
  p.node_id = p.candidate;
  return p;
}

Predictor::Predictor(const Classifier& classifier, const Taxonomy& tax, Scheme scheme, bool use_index)
    : classifier_(classifier), scheme_(scheme)
{
  leaves_ = cost_matrix(tax, NodeSelection::LeavesOnly);
  if (leaves_.names != classifier.class_names)
    throw ValidationError("predictor: classifier classes do not match the taxonomy leaves");
  if (scheme == Scheme::AnyNode) {
    candidates_ = cost_matrix(tax, NodeSelection::AllNodes);
    cost_block_ = any_node_cost_block(candidates_, tax);
  } else {
    candidates_ = leaves_;
    cost_block_ = leaves_.costs;
  }
  if (use_index && classifier.head == Head::Prototypes)
    index_.emplace(classifier.prototypes.leaf_coords());
}

std::vector<Prediction> Predictor::predict(const Eigen::MatrixXd& features) const
{
  const Eigen::MatrixXd post = classifier_.posteriors(features);
  Eigen::MatrixXd emb;
  const bool prototypes = classifier_.head == Head::Prototypes;
  Eigen::MatrixXd leaf_coords;
  if (prototypes && scheme_ == Scheme::MaxProb) {
    emb = classifier_.embed(features);
    leaf_coords = classifier_.prototypes.leaf_coords();
  }
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(post.rows()));
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    Prediction p;
    p.scheme = scheme_;
    p.posterior = post.row(i).transpose();
    p.expected_costs = expected_costs(p.posterior, cost_block_);
    if (scheme_ == Scheme::MaxProb) {
      if (prototypes)
        p.candidate = index_ ? index_->nearest(emb.row(i).transpose())
                             : nearest_exhaustive(leaf_coords, emb.row(i).transpose());
      else
        p.candidate = argmax(p.posterior);
    } else {
      p.candidate = argmin(*p.expected_costs);
    }
    p.node_id = candidates_.node_ids.empty() ? -1 : candidates_.node_ids[static_cast<std::size_t>(p.candidate)];
    out.push_back(std::move(p));
  }
  return out;
}

std::string predictions_csv(const std::vector<Prediction>& predictions,
                            const FiniteMetric& candidates, const std::vector<std::string>& leaf_names)
{
  std::string out =
      "sample_id,scheme,predicted,top1_class,top1_prob,top2_class,top2_prob,top3_class,top3_prob,"
      "expected_cost\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    out += std::to_string(i) + "," + to_string(p.scheme) + "," +
           csv::escape_field(candidates.names.at(static_cast<std::size_t>(p.candidate)));
    std::vector<int> order(static_cast<std::size_t>(p.posterior.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return p.posterior(a) > p.posterior(b); });
    for (std::size_t t = 0; t < 3; ++t) {
      if (t < order.size())
        out += "," + csv::escape_field(leaf_names.at(static_cast<std::size_t>(order[t]))) + "," +
               csv::format_number(p.posterior(order[t]));
      else
        out += ",,";
    }
    out += ",";
    if (p.expected_costs)
      out += csv::format_number((*p.expected_costs)(p.candidate));
    out += "\n";
  }
  return out;
}

} // namespace mgproto
