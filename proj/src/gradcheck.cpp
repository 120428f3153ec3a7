#include "mgproto/gradcheck.hpp"

#include "mgproto/error.hpp"

#include <algorithm>
#include <cmath>

namespace mgproto {

GradientCheck finite_difference_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                                      const Eigen::VectorXd& params,
                                      const Eigen::VectorXd& analytic, double h, double floor)
{
  if (params.size() != analytic.size())
    throw ValidationError("gradient check: size mismatch");
  GradientCheck out;
  out.numeric.resize(params.size());
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(params(i)));
    probe(i) = params(i) + step;
    const double up = loss(probe);
    probe(i) = params(i) - step;
    const double down = loss(probe);
    probe(i) = params(i);
    out.numeric(i) = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic(i)), std::abs(out.numeric(i)), floor});
    const double err = std::abs(analytic(i) - out.numeric(i)) / denom;
    if (err > out.max_relative_error || out.worst_index < 0) {
      out.max_relative_error = std::max(err, out.max_relative_error);
      out.worst_index = i;
    }
  }
  return out;
}

} // namespace mgproto
