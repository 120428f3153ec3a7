#include "mgproto/losses.hpp"

#include "mgproto/error.hpp"

#include <cmath>

namespace mgproto {

double log_sum_exp(const VectorRef& values)
{
  const double top = values.maxCoeff();
  if (!std::isfinite(top))
    return top;
  return top + std::log((values.array() - top).exp().sum());
}

Eigen::VectorXd softmax(const VectorRef& logits)
{
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

Eigen::VectorXd posterior(const VectorRef& embedding, const Eigen::MatrixXd& prototypes,
                          const DistanceSpec& spec)
{
  if (embedding.size() != prototypes.cols())
    throw ValidationError("posterior: embedding dimension " + std::to_string(embedding.size()) +
                          " does not match prototypes " + std::to_string(prototypes.cols()));
  Eigen::VectorXd neg(prototypes.rows());
  for (Eigen::Index k = 0; k < prototypes.rows(); ++k)
    neg(k) = -distance_from_squared(spec, (prototypes.row(k).transpose() - embedding).squaredNorm());
  return softmax(neg);
}

EmbeddingNll embedding_nll(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                           const Eigen::MatrixXd& prototypes, const DistanceSpec& spec)
{
  const auto n = embeddings.rows();
  const auto classes = prototypes.rows();
  if (n == 0 || labels.empty())
    throw ValidationError("data loss: empty batch");
  if (static_cast<std::size_t>(n) != labels.size())
    throw ValidationError("data loss: feature/label count mismatch");
  if (embeddings.cols() != prototypes.cols())
    throw ValidationError("data loss: embedding/prototype dimension mismatch");

  EmbeddingNll out;
  out.embedding_grads = Eigen::MatrixXd::Zero(n, embeddings.cols());
  out.prototype_grads = Eigen::MatrixXd::Zero(classes, prototypes.cols());
  const double inv = 1.0 / static_cast<double>(n);
  Eigen::VectorXd neg(classes);
  Eigen::VectorXd r2(classes);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int z = labels[static_cast<std::size_t>(i)];
    if (z < 0 || z >= classes)
      throw ValidationError("data loss: label " + std::to_string(z) + " out of range");
    for (Eigen::Index k = 0; k < classes; ++k) {
      r2(k) = (embeddings.row(i) - prototypes.row(k)).squaredNorm();
      neg(k) = -distance_from_squared(spec, r2(k));
    }
    const double lse = log_sum_exp(neg);
    sum += -neg(z) + lse;
    const Eigen::VectorXd p = (neg.array() - lse).exp().matrix();
    for (Eigen::Index k = 0; k < classes; ++k) {
      // dLoss/dd_k = [k == z] - p_k
      const double coeff = inv * ((k == z ? 1.0 : 0.0) - p(k)) * gradient_factor(spec, r2(k));
      const Eigen::RowVectorXd step = coeff * (embeddings.row(i) - prototypes.row(k));
      out.embedding_grads.row(i) += step;
      out.prototype_grads.row(k) -= step;
    }
  }
  out.value = sum * inv;
  return out;
}

DataLoss data_loss(const LabeledBatch& batch, const EmbeddingModel& model, const PrototypeSet& pi,
                   const DistanceSpec& spec)
{
  if (batch.labels.empty())
    throw ValidationError("data loss: empty batch");
  ForwardCache cache;
  const Eigen::MatrixXd e = model.forward_batch(batch.features, &cache);
  const auto nll = embedding_nll(e, batch.labels, pi.leaf_coords(), spec);
  DataLoss out;
  out.value = nll.value;
  out.model_grads = model.backward(cache, nll.embedding_grads);
  out.prototype_grads = Eigen::MatrixXd::Zero(pi.coords.rows(), pi.coords.cols());
  for (std::size_t k = 0; k < pi.leaf_rows.size(); ++k)
    out.prototype_grads.row(pi.leaf_rows[k]) = nll.prototype_grads.row(static_cast<Eigen::Index>(k));
  return out;
}

RegularizerValue regularizer_loss(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& costs,
                                  const DistanceSpec& spec, Regularizer kind, int triplet_count,
                                  std::mt19937_64& rng)
{
  RegularizerValue out;
  switch (kind) {
  case Regularizer::Disto:
  case Regularizer::DistoFixedScale: {
    auto loss = disto_loss(coords, costs, spec,
                           kind == Regularizer::Disto ? ScaleMode::Optimal : ScaleMode::Fixed);
    out.value = loss.value;
    out.s_star = loss.s_star;
    out.grads = std::move(loss.grads);
    break;
  }
  case Regularizer::Rank: {
    const auto batch = sample_triplets(static_cast<int>(coords.rows()),
                                       static_cast<std::size_t>(triplet_count), rng);
    auto loss = rank_loss(coords, costs, spec, batch);
    out.value = loss.value;
    out.grads = std::move(loss.grads);
    break;
  }
  case Regularizer::None:
    out.grads = Eigen::MatrixXd::Zero(coords.rows(), coords.cols());
    break;
  }
  return out;
}

TotalLoss total_loss(const LabeledBatch& batch, const EmbeddingModel& model, const PrototypeSet& pi,
                     const Eigen::MatrixXd& costs, const TrainConfig& config, std::mt19937_64& rng)
{
  auto data = data_loss(batch, model, pi, config.distance);
  auto reg = regularizer_loss(pi.coords, costs, config.distance, config.regularizer,
                              config.triplet_count, rng);
  TotalLoss out;
  out.breakdown.l_data = data.value;
  out.breakdown.l_reg = reg.value;
  out.breakdown.total = data.value + config.lambda * reg.value;
  out.breakdown.s_star = reg.s_star;
  out.model_grads = std::move(data.model_grads);
  out.prototype_grads = data.prototype_grads + config.lambda * reg.grads;
  return out;
}

Eigen::VectorXd soft_label_targets(const Eigen::MatrixXd& costs, int true_class, double beta)
{
  if (!(beta > 0.0))
    throw ValidationError("soft labels: beta must be > 0");
  if (true_class < 0 || true_class >= costs.rows())
    throw ValidationError("soft labels: class out of range");
  const Eigen::VectorXd neg = -beta * costs.col(true_class);
  return softmax(neg);
}

Eigen::MatrixXd target_rows(const std::vector<int>& labels, const Eigen::MatrixXd& costs, Head head,
                            double beta)
{
  const auto classes = costs.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (head == Head::SoftLabels)
      out.row(row) = soft_label_targets(costs, labels[i], beta).transpose();
    else
      out(row, labels[i]) = 1.0;
  }
  return out;
}

LogitLoss logit_loss(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                     const EmbeddingModel& embedding, const EmbeddingModel& head)
{
  const auto n = features.rows();
  if (n == 0)
    throw ValidationError("logit loss: empty batch");
  if (targets.rows() != n || targets.cols() != head.output_dim())
    throw ValidationError("logit loss: target shape mismatch");
  ForwardCache embed_cache;
  ForwardCache head_cache;
  const Eigen::MatrixXd e = embedding.forward_batch(features, &embed_cache);
  const Eigen::MatrixXd z = head.forward_batch(e, &head_cache);

  const double inv = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd dz(z.rows(), z.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lse = log_sum_exp(z.row(i).transpose());
    const Eigen::RowVectorXd logp = z.row(i).array() - lse;
    sum -= targets.row(i).dot(logp);
    // targets sum to one, so dLoss/dz = softmax - target
    dz.row(i) = inv * (logp.array().exp().matrix() - targets.row(i));
  }
  LogitLoss out;
  out.value = sum * inv;
  Eigen::MatrixXd de;
  out.head_grads = head.backward(head_cache, dz, &de);
  out.embedding_grads = embedding.backward(embed_cache, de);
  return out;
}

} // namespace mgproto
