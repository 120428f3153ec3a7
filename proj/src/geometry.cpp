#include "mgproto/geometry.hpp"

#include "mgproto/error.hpp"

#include <cmath>

namespace mgproto {

std::string to_string(DistanceKind kind)
{
  switch (kind) {
  case DistanceKind::Euclidean: return "euclidean";
  case DistanceKind::SquaredEuclidean: return "squared-euclidean";
  case DistanceKind::Huber: return "huber";
  }
  return "unknown";
}

DistanceKind distance_kind_from_string(const std::string& name)
{
  if (name == "euclidean")
    return DistanceKind::Euclidean;
  if (name == "squared-euclidean" || name == "squared")
    return DistanceKind::SquaredEuclidean;
  if (name == "huber")
    return DistanceKind::Huber;
  throw ValidationError("unknown distance kind '" + name + "'");
}

void validate(const DistanceSpec& spec)
{
  if (spec.kind == DistanceKind::Huber && !(spec.delta > 0.0 && std::isfinite(spec.delta)))
    throw ValidationError("huber distance needs delta > 0");
}

double distance_from_squared(const DistanceSpec& spec, double r2)
{
  switch (spec.kind) {
  case DistanceKind::Euclidean:
    return std::sqrt(r2);
  case DistanceKind::SquaredEuclidean:
    return r2;
  case DistanceKind::Huber: {
    const double t = r2 / (spec.delta * spec.delta);
    // delta * (sqrt(t + 1) - 1) without cancellation for small t
    return spec.delta * t / (std::sqrt(t + 1.0) + 1.0);
  }
  }
  return 0.0;
}

double gradient_factor(const DistanceSpec& spec, double r2)
{
  switch (spec.kind) {
  case DistanceKind::Euclidean:
    return r2 > 0.0 ? 1.0 / std::sqrt(r2) : 0.0;
  case DistanceKind::SquaredEuclidean:
    return 2.0;
  case DistanceKind::Huber:
    return 1.0 / (spec.delta * std::sqrt(r2 / (spec.delta * spec.delta) + 1.0));
  }
  return 0.0;
}

namespace {

void check_dims(const VectorRef& u, const VectorRef& v)
{
  if (u.size() != v.size())
    throw ValidationError("distance: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  if (u.size() == 0)
    throw ValidationError("distance: empty vectors");
}

} // namespace

double distance(const DistanceSpec& spec, const VectorRef& u, const VectorRef& v)
{
  check_dims(u, v);
  return distance_from_squared(spec, (u - v).squaredNorm());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> distance_gradient(const DistanceSpec& spec,
                                                              const VectorRef& u,
                                                              const VectorRef& v)
{
  check_dims(u, v);
  const Eigen::VectorXd diff = u - v;
  const double r2 = diff.squaredNorm();
  if (spec.kind == DistanceKind::Euclidean && r2 == 0.0)
    throw NonDifferentiablePoint();
  Eigen::VectorXd grad_u = gradient_factor(spec, r2) * diff;
  Eigen::VectorXd grad_v = -grad_u;
  return {std::move(grad_u), std::move(grad_v)};
}

Eigen::MatrixXd pairwise_distances(const DistanceSpec& spec, const Eigen::MatrixXd& points)
{
  const auto n = points.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double d = distance_from_squared(spec, (points.row(a) - points.row(b)).squaredNorm());
      out(a, b) = d;
      out(b, a) = d;
    }
  return out;
}

} // namespace mgproto
