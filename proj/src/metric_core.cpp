#include "mgproto/metric_core.hpp"

#include "mgproto/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mgproto {

Eigen::MatrixXd PrototypeSet::leaf_coords() const
{
  Eigen::MatrixXd out(static_cast<Eigen::Index>(leaf_rows.size()), coords.cols());
  for (std::size_t i = 0; i < leaf_rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = coords.row(leaf_rows[i]);
  return out;
}

PrototypeSet PrototypeSet::random(const Taxonomy& tax, Eigen::Index dim, bool include_internal,
                                  std::mt19937_64& rng)
{
  if (dim < 1)
    throw ValidationError("prototype dimension must be >= 1");
  PrototypeSet pi;
  pi.includes_internal = include_internal;
  if (include_internal) {
    for (std::size_t id = 0; id < tax.size(); ++id) {
      pi.node_ids.push_back(static_cast<int>(id));
      if (tax.is_leaf(static_cast<int>(id)))
        pi.leaf_rows.push_back(static_cast<int>(id));
    }
  } else {
    pi.node_ids = tax.leaves();
    pi.leaf_rows.resize(tax.leaves().size());
    std::iota(pi.leaf_rows.begin(), pi.leaf_rows.end(), 0);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  pi.coords.resize(static_cast<Eigen::Index>(pi.node_ids.size()), dim);
  for (Eigen::Index r = 0; r < pi.coords.rows(); ++r)
    for (Eigen::Index c = 0; c < dim; ++c)
      pi.coords(r, c) = normal(rng);
  return pi;
}

void validate(const PrototypeSet& pi)
{
  if (pi.coords.rows() < 2)
    throw ValidationError("prototype set needs at least 2 rows");
  if (!pi.coords.allFinite())
    throw ValidationError("prototype set has non-finite coordinates");
  if (pi.node_ids.size() != static_cast<std::size_t>(pi.coords.rows()))
    throw ValidationError("prototype class map does not cover every row");
  std::vector<int> seen = pi.node_ids;
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw ValidationError("prototype class map is not injective");
  for (int r : pi.leaf_rows)
    if (r < 0 || r >= pi.coords.rows())
      throw ValidationError("prototype leaf row out of range");
}

namespace {

void check_shapes(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs)
{
  if (costs.rows() != costs.cols())
    throw ValidationError("cost matrix is not square");
  if (coords.rows() != costs.rows())
    throw ValidationError("prototype count " + std::to_string(coords.rows()) +
                          " does not match cost matrix size " + std::to_string(costs.rows()));
  if (coords.rows() < 2)
    throw ValidationError("need at least 2 prototypes");
  for (Eigen::Index k = 0; k < costs.rows(); ++k)
    for (Eigen::Index l = 0; l < costs.cols(); ++l)
      if (k != l && !(costs(k, l) > 0.0))
        throw ValidationError("cost matrix has a non-positive off-diagonal entry at (" +
                              std::to_string(k) + ", " + std::to_string(l) + ")");
}

double ordered_pair_norm(Eigen::Index k)
{
  return 1.0 / (static_cast<double>(k) * static_cast<double>(k - 1));
}

} // namespace

double scaled_distortion(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                         const DistanceSpec& spec, double scale)
{
  check_shapes(coords, costs);
  const auto n = coords.rows();
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k == l)
        continue;
      const double d = distance_from_squared(spec, (coords.row(k) - coords.row(l)).squaredNorm());
      sum += std::abs(scale * d - costs(k, l)) / costs(k, l);
    }
  return sum * ordered_pair_norm(n);
}

double distortion(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                  const DistanceSpec& spec)
{
  return scaled_distortion(coords, costs, spec, 1.0);
}

std::vector<double> distance_ratios(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                                    const DistanceSpec& spec)
{
  check_shapes(coords, costs);
  const auto n = coords.rows();
  std::vector<double> ratios;
  ratios.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double d = distance_from_squared(spec, (coords.row(k) - coords.row(l)).squaredNorm());
      ratios.push_back(d / costs(k, l));
    }
  return ratios;
}

L1ScaleSolution solve_l1_scale(std::span<const double> ratios)
{
  if (ratios.empty())
    throw ValidationError("optimal scale: no pairs");
  for (double r : ratios)
    if (!std::isfinite(r) || r < 0.0)
      throw NumericError("optimal scale: non-finite or negative distance ratio");

  // Stable order: ties keep pair order.
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ratios[a] < ratios[b]; });

  L1ScaleSolution sol;
  sol.sorted_ratios.reserve(ratios.size());
  for (std::size_t i : order)
    sol.sorted_ratios.push_back(ratios[i]);

  const double total = std::accumulate(sol.sorted_ratios.begin(), sol.sorted_ratios.end(), 0.0);
  if (total <= 0.0)
    throw NumericError("degenerate prototypes: all pairwise distances are zero");

  // tail[i] = sum of ratios strictly after position i
  const std::size_t count = sol.sorted_ratios.size();
  std::vector<double> tail(count, 0.0);
  for (std::size_t i = count - 1; i-- > 0;)
    tail[i] = tail[i + 1] + sol.sorted_ratios[i + 1];

  double prefix = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    prefix += sol.sorted_ratios[i];
    if (prefix >= tail[i]) {
      sol.pivot = i;
      sol.s_star = 1.0 / sol.sorted_ratios[i];
      return sol;
    }
  }
  // unreachable: the last index always satisfies prefix >= 0
  sol.pivot = sol.sorted_ratios.size() - 1;
  sol.s_star = 1.0 / sol.sorted_ratios.back();
  return sol;
}

double optimal_scale_l1(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                        const DistanceSpec& spec)
{
  return solve_l1_scale(distance_ratios(coords, costs, spec)).s_star;
}

double scale_free_distortion(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                             const DistanceSpec& spec)
{
  return scaled_distortion(coords, costs, spec, optimal_scale_l1(coords, costs, spec));
}

double optimal_scale_l2(std::span<const double> ratios)
{
  double num = 0.0;
  double den = 0.0;
  for (double r : ratios) {
    num += r;
    den += r * r;
  }
  if (!(den > 0.0))
    throw NumericError("degenerate prototypes: all pairwise distances are zero");
  return num / den;
}

DistortionReport distortion_report(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                                   const DistanceSpec& spec)
{
  const auto ratios = distance_ratios(coords, costs, spec);
  DistortionReport report;
  report.pair_count = ratios.size();
  report.distortion = distortion(coords, costs, spec);
  report.s_star_l1 = solve_l1_scale(ratios).s_star;
  report.s_star_l2 = optimal_scale_l2(ratios);
  report.scale_free_distortion = scaled_distortion(coords, costs, spec, report.s_star_l1);
  return report;
}

DistoLoss disto_loss(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                     const DistanceSpec& spec, ScaleMode mode)
{
  check_shapes(coords, costs);
  const auto n = coords.rows();
  const Eigen::MatrixXd dist = pairwise_distances(spec, coords);

  DistoLoss out;
  if (mode == ScaleMode::Optimal) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index l = k + 1; l < n; ++l) {
        const double r = dist(k, l) / costs(k, l);
        num += r;
        den += r * r;
      }
    if (!(den > 0.0))
      throw NumericError("degenerate prototypes: all pairwise distances are zero");
    out.s_star = num / den;
  } else {
    out.s_star = 1.0;
  }

  // Each unordered pair appears twice in the ordered sum.
  const double norm = 2.0 * ordered_pair_norm(n);
  const double s = out.s_star;
  double value = 0.0;
  out.grads = Eigen::MatrixXd::Zero(n, coords.cols());
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = k + 1; l < n; ++l) {
      const double resid = (s * dist(k, l) - costs(k, l)) / costs(k, l);
      value += resid * resid;
      const double r2 = (coords.row(k) - coords.row(l)).squaredNorm();
      const double dvalue_dd = norm * 2.0 * resid * s / costs(k, l);
      const double g = dvalue_dd * gradient_factor(spec, r2);
      const Eigen::RowVectorXd step = g * (coords.row(k) - coords.row(l));
      out.grads.row(k) += step;
      out.grads.row(l) -= step;
    }
  out.value = norm * value;
  return out;
}

TripletBatch sample_triplets(int classes, std::size_t count, std::mt19937_64& rng)
{
  if (classes < 3)
    throw ValidationError("triplet sampling needs at least 3 classes");
  if (count < 1)
    throw ValidationError("triplet sample size must be >= 1");
  TripletBatch batch;
  batch.triplets.reserve(count);
  std::uniform_int_distribution<int> first(0, classes - 1);
  std::uniform_int_distribution<int> second(0, classes - 2);
  std::uniform_int_distribution<int> third(0, classes - 3);
  for (std::size_t i = 0; i < count; ++i) {
    const int k = first(rng);
    int l = second(rng);
    if (l >= k)
      ++l;
    int m = third(rng);
    // skip over the two taken indices in increasing order
    const int lo = std::min(k, l);
    const int hi = std::max(k, l);
    if (m >= lo)
      ++m;
    if (m >= hi)
      ++m;
    batch.triplets.push_back({k, l, m});
  }
  return batch;
}

TripletBatch all_triplets(int classes)
{
  if (classes < 3)
    throw ValidationError("triplet enumeration needs at least 3 classes");
  TripletBatch batch;
  for (int k = 0; k < classes; ++k)
    for (int l = 0; l < classes; ++l)
      for (int m = 0; m < classes; ++m)
        if (k != l && l != m && k != m)
          batch.triplets.push_back({k, l, m});
  return batch;
}

namespace {

double softplus(double x)
{
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x)
{
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

} // namespace

RankLoss rank_loss(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                   const DistanceSpec& spec, const TripletBatch& batch)
{
  check_shapes(coords, costs);
  if (batch.triplets.empty())
    throw ValidationError("rank loss: empty triplet batch");
  const auto n = static_cast<int>(coords.rows());
  RankLoss out;
  out.grads = Eigen::MatrixXd::Zero(coords.rows(), coords.cols());
  const double inv = 1.0 / static_cast<double>(batch.size());

  auto add_distance_grad = [&](int a, int b, double coeff) {
    const double r2 = (coords.row(a) - coords.row(b)).squaredNorm();
    const Eigen::RowVectorXd step = coeff * gradient_factor(spec, r2) * (coords.row(a) - coords.row(b));
    out.grads.row(a) += step;
    out.grads.row(b) -= step;
  };

  double sum = 0.0;
  for (const auto& t : batch.triplets) {
    if (t.anchor < 0 || t.near < 0 || t.far < 0 || t.anchor >= n || t.near >= n || t.far >= n)
      throw ValidationError("rank loss: triplet references an unknown class");
    if (t.anchor == t.near || t.near == t.far || t.anchor == t.far)
      throw ValidationError("rank loss: triplet members must be distinct");
    const double d_near = distance_from_squared(
        spec, (coords.row(t.anchor) - coords.row(t.near)).squaredNorm());
    const double d_far = distance_from_squared(
        spec, (coords.row(t.anchor) - coords.row(t.far)).squaredNorm());
    const double x = d_near - d_far;
    const bool target = costs(t.anchor, t.near) > costs(t.anchor, t.far);
    // -log(sigmoid(x)) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x)
    sum += target ? softplus(-x) : softplus(x);
    const double dx = inv * (sigmoid(x) - (target ? 1.0 : 0.0));
    add_distance_grad(t.anchor, t.near, dx);
    add_distance_grad(t.anchor, t.far, -dx);
  }
  out.value = sum * inv;
  return out;
}

} // namespace mgproto
