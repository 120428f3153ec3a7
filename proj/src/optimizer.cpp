#include "mgproto/optimizer.hpp"

#include "mgproto/error.hpp"

#include <cmath>

namespace mgproto {

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {}

void Optimizer::begin_step()
{
  ++step_;
}

void Optimizer::update(std::size_t block, Eigen::Ref<Eigen::VectorXd> params,
                       const Eigen::Ref<const Eigen::VectorXd>& grads)
{
  if (params.size() != grads.size())
    throw ValidationError("optimizer: parameter/gradient size mismatch");
  if (step_ == 0)
    throw ValidationError("optimizer: begin_step() not called");
  if (states_.size() <= block)
    states_.resize(block + 1);
  State& s = states_[block];
  if (s.first.size() != params.size()) {
    s.first = Eigen::VectorXd::Zero(params.size());
    s.second = Eigen::VectorXd::Zero(params.size());
  }

  if (config_.kind == OptimizerConfig::Kind::Sgd) {
    s.first = config_.momentum * s.first + grads;
    params -= config_.lr * s.first;
    return;
  }
  s.first = config_.beta1 * s.first + (1.0 - config_.beta1) * grads;
  s.second = config_.beta2 * s.second + (1.0 - config_.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  params.array() -= config_.lr * (s.first.array() / c1) /
                    ((s.second.array() / c2).sqrt() + config_.eps);
}

} // namespace mgproto
