#pragma once

#include <Eigen/Core>

#include <functional>

namespace mgproto {

struct GradientCheck
{
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  Eigen::VectorXd numeric;
};

/// Compares `analytic` against central differences of `loss` with step
/// h * max(1, |param|). The error of one component is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradientCheck finite_difference_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                                      const Eigen::VectorXd& params,
                                      const Eigen::VectorXd& analytic, double h = 1e-6,
                                      double floor = 1e-3);

} // namespace mgproto
