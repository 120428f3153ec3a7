#include "mgproto/model.hpp"

#include "mgproto/error.hpp"
#include "mgproto/losses.hpp"

#include <cmath>

namespace mgproto {

std::string to_string(Architecture arch)
{
  switch (arch) {
  case Architecture::Identity: return "identity";
  case Architecture::Linear: return "linear";
  case Architecture::Mlp: return "mlp";
  }
  return "unknown";
}

std::string to_string(Activation act)
{
  return act == Activation::Relu ? "relu" : "tanh";
}

Architecture architecture_from_string(const std::string& name)
{
  if (name == "identity")
    return Architecture::Identity;
  if (name == "linear")
    return Architecture::Linear;
  if (name == "mlp")
    return Architecture::Mlp;
  throw ValidationError("unknown architecture '" + name + "'");
}

Activation activation_from_string(const std::string& name)
{
  if (name == "relu")
    return Activation::Relu;
  if (name == "tanh")
    return Activation::Tanh;
  throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Head head)
{
  switch (head) {
  case Head::Prototypes: return "prototypes";
  case Head::CrossEntropy: return "cross-entropy";
  case Head::SoftLabels: return "soft-labels";
  }
  return "unknown";
}

Head head_from_string(const std::string& name)
{
  if (name == "prototypes")
    return Head::Prototypes;
  if (name == "cross-entropy")
    return Head::CrossEntropy;
  if (name == "soft-labels")
    return Head::SoftLabels;
  throw ValidationError("unknown head '" + name + "'");
}

std::size_t EmbeddingModel::count_parameters(const std::vector<int>& sizes)
{
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    n += static_cast<std::size_t>(sizes[i + 1]) * (static_cast<std::size_t>(sizes[i]) + 1);
  return n;
}

EmbeddingModel EmbeddingModel::identity(int dim)
{
  if (dim < 1)
    throw ValidationError("identity model needs dim >= 1");
  EmbeddingModel m;
  m.arch_ = Architecture::Identity;
  m.sizes_ = {dim, dim};
  m.params_.resize(0);
  return m;
}

EmbeddingModel EmbeddingModel::linear(int input_dim, int output_dim)
{
  if (input_dim < 1 || output_dim < 1)
    throw ValidationError("linear model needs positive dimensions");
  EmbeddingModel m;
  m.arch_ = Architecture::Linear;
  m.sizes_ = {input_dim, output_dim};
  m.params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count_parameters(m.sizes_)));
  return m;
}

EmbeddingModel EmbeddingModel::mlp(std::vector<int> layer_sizes, Activation activation)
{
  if (layer_sizes.size() < 2)
    throw ValidationError("mlp needs at least input and output sizes");
  for (int s : layer_sizes)
    if (s < 1)
      throw ValidationError("mlp layer sizes must be positive");
  EmbeddingModel m;
  m.arch_ = Architecture::Mlp;
  m.activation_ = activation;
  m.sizes_ = std::move(layer_sizes);
  m.params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count_parameters(m.sizes_)));
  return m;
}

void EmbeddingModel::set_parameters(Eigen::VectorXd params)
{
  const auto expected = arch_ == Architecture::Identity ? 0 : count_parameters(sizes_);
  if (static_cast<std::size_t>(params.size()) != expected)
    throw ValidationError("model expects " + std::to_string(expected) + " parameters, got " +
                          std::to_string(params.size()));
  if (!params.allFinite())
    throw ValidationError("model parameters must be finite");
  params_ = std::move(params);
}

void EmbeddingModel::init_random(std::mt19937_64& rng)
{
  Eigen::Index offset = 0;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const int in = sizes_[layer];
    const int out = sizes_[layer + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    const Eigen::Index n = static_cast<Eigen::Index>(out) * (in + 1);
    for (Eigen::Index i = 0; i < n; ++i)
      params_(offset + i) = uniform(rng);
    offset += n;
  }
}

Eigen::VectorXd EmbeddingModel::forward(const VectorRef& x) const
{
  if (x.size() != input_dim())
    throw ValidationError("forward: expected input dimension " + std::to_string(input_dim()) +
                          ", got " + std::to_string(x.size()));
  Eigen::MatrixXd row = x.transpose();
  return forward_batch(row).row(0).transpose();
}

Eigen::MatrixXd EmbeddingModel::forward_batch(const Eigen::MatrixXd& inputs, ForwardCache* cache) const
{
  if (inputs.cols() != input_dim())
    throw ValidationError("forward: expected input dimension " + std::to_string(input_dim()) +
                          ", got " + std::to_string(inputs.cols()));
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd h = inputs;
  Eigen::Index offset = 0;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const int in = sizes_[layer];
    const int out = sizes_[layer + 1];
    Eigen::Map<const Eigen::MatrixXd> weights(params_.data() + offset, out, in);
    Eigen::Map<const Eigen::VectorXd> bias(params_.data() + offset + static_cast<Eigen::Index>(out) * in, out);
    offset += static_cast<Eigen::Index>(out) * (in + 1);

    Eigen::MatrixXd z = h * weights.transpose();
    z.rowwise() += bias.transpose();
    if (cache) {
      cache->inputs.push_back(h);
      cache->pre_activations.push_back(z);
    }
    const bool hidden = layer + 1 < layer_count();
    if (hidden) {
      if (activation_ == Activation::Relu)
        h = z.cwiseMax(0.0);
      else
        h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
  }
  if (!h.allFinite())
    throw NumericError("forward: non-finite activation output");
  return h;
}

Eigen::VectorXd EmbeddingModel::backward(const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                                         Eigen::MatrixXd* input_grad) const
{
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  if (layer_count() == 0) {
    if (input_grad)
      *input_grad = output_grad;
    return grad;
  }
  if (cache.inputs.size() != layer_count())
    throw ValidationError("backward: cache does not match the model");

  std::vector<Eigen::Index> offsets(layer_count());
  Eigen::Index offset = 0;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    offsets[layer] = offset;
    offset += static_cast<Eigen::Index>(sizes_[layer + 1]) * (sizes_[layer] + 1);
  }

  Eigen::MatrixXd g = output_grad;
  for (std::size_t layer = layer_count(); layer-- > 0;) {
    const int in = sizes_[layer];
    const int out = sizes_[layer + 1];
    if (layer + 1 < layer_count()) {
      const auto& z = cache.pre_activations[layer];
      if (activation_ == Activation::Relu)
        g = g.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
      else
        g = g.cwiseProduct((1.0 - z.array().tanh().square()).matrix());
    }
    Eigen::Map<Eigen::MatrixXd> dweights(grad.data() + offsets[layer], out, in);
    Eigen::Map<Eigen::VectorXd> dbias(grad.data() + offsets[layer] + static_cast<Eigen::Index>(out) * in, out);
    dweights = g.transpose() * cache.inputs[layer];
    dbias = g.colwise().sum().transpose();
    if (layer > 0 || input_grad) {
      Eigen::Map<const Eigen::MatrixXd> weights(params_.data() + offsets[layer], out, in);
      g = g * weights;
    }
  }
  if (input_grad)
    *input_grad = std::move(g);
  return grad;
}

Eigen::MatrixXd Classifier::embed(const Eigen::MatrixXd& features) const
{
  return embedding.forward_batch(features);
}

Eigen::MatrixXd Classifier::posteriors(const Eigen::MatrixXd& features) const
{
  const Eigen::MatrixXd e = embed(features);
  if (head == Head::Prototypes) {
    const Eigen::MatrixXd leaves = prototypes.leaf_coords();
    Eigen::MatrixXd out(e.rows(), leaves.rows());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
      out.row(i) = posterior(e.row(i).transpose(), leaves, distance).transpose();
    return out;
  }
  const Eigen::MatrixXd z = logits.forward_batch(e);
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    out.row(i) = softmax(z.row(i).transpose()).transpose();
  return out;
}

} // namespace mgproto
