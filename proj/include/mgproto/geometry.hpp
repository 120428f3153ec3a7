#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>

namespace mgproto {

enum class DistanceKind { Euclidean, SquaredEuclidean, Huber };

struct DistanceSpec
{
  DistanceKind kind = DistanceKind::Euclidean;
  /// Huber transition scale, in embedding units. Ignored for other kinds.
  double delta = 0.1;
};

std::string to_string(DistanceKind kind);
DistanceKind distance_kind_from_string(const std::string& name);

/// Throws ValidationError when a Huber spec has delta <= 0.
void validate(const DistanceSpec& spec);

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// d(u, v). Euclidean: |u-v|; squared: |u-v|^2;
/// huber: delta * (sqrt(|u-v|^2 / delta^2 + 1) - 1).
double distance(const DistanceSpec& spec, const VectorRef& u, const VectorRef& v);

/// Distance as a function of the squared Euclidean norm r2 = |u-v|^2.
double distance_from_squared(const DistanceSpec& spec, double r2);

/// Factor g such that grad_u d(u, v) = g * (u - v). For the Euclidean kind at
/// r2 = 0 this returns 0 (the subgradient used by training code).
double gradient_factor(const DistanceSpec& spec, double r2);

/// Raised by distance_gradient for the Euclidean kind at u == v.
class NonDifferentiablePoint : public std::domain_error
{
public:
  NonDifferentiablePoint() : std::domain_error("euclidean distance is not differentiable at u == v") {}
};

/// Analytic (grad_u, grad_v); grad_v == -grad_u.
std::pair<Eigen::VectorXd, Eigen::VectorXd> distance_gradient(const DistanceSpec& spec,
                                                              const VectorRef& u,
                                                              const VectorRef& v);

/// All pairwise distances between the rows of `points`.
Eigen::MatrixXd pairwise_distances(const DistanceSpec& spec, const Eigen::MatrixXd& points);

} // namespace mgproto
