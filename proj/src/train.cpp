#include "mgproto/train.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/error.hpp"
#include "mgproto/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>
#include <string_view>

namespace mgproto {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

EmbeddingModel build_embedding(const ModelConfig& model, int input_dim, int embedding_dim)
{
  switch (model.architecture) {
  case Architecture::Identity:
    if (input_dim != embedding_dim)
      throw ValidationError("identity model needs embedding_dim == input dimension (" +
                            std::to_string(input_dim) + ")");
    return EmbeddingModel::identity(input_dim);
  case Architecture::Linear:
    return EmbeddingModel::linear(input_dim, embedding_dim);
  case Architecture::Mlp: {
    std::vector<int> sizes{input_dim};
    sizes.insert(sizes.end(), model.hidden.begin(), model.hidden.end());
    sizes.push_back(embedding_dim);
    return EmbeddingModel::mlp(std::move(sizes), model.activation);
  }
  }
  throw ValidationError("unknown architecture");
}

int argmax_row(const Eigen::MatrixXd& m, Eigen::Index row)
{
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best))
      best = c;
  return static_cast<int>(best);
}

struct Objective
{
  double value = 0.0;
  Eigen::MatrixXd grads;
};

} // namespace

std::pair<double, double> error_and_cost(const Classifier& classifier, const Dataset& data,
                                         const Eigen::MatrixXd& leaf_costs)
{
  const Eigen::MatrixXd post = classifier.posteriors(data.features);
  double errors = 0.0;
  double cost = 0.0;
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    const int pred = argmax_row(post, i);
    const int truth = data.labels[static_cast<std::size_t>(i)];
    if (pred != truth) {
      errors += 1.0;
      cost += leaf_costs(pred, truth);
    }
  }
  const double n = static_cast<double>(post.rows());
  return {errors / n, cost / n};
}

PrototypeFit fit_prototypes(const Eigen::MatrixXd& initial, const Eigen::MatrixXd& costs,
                            const PrototypeFitOptions& options)
{
  PrototypeFit fit;
  fit.coords = initial;
  if (options.regularizer == Regularizer::None)
    return fit;

  TripletBatch triplets;
  if (options.regularizer == Regularizer::Rank) {
    const auto k = static_cast<long>(initial.rows());
    if (k * (k - 1) * (k - 2) <= 100000) {
      triplets = all_triplets(static_cast<int>(k));
    } else {
      std::mt19937_64 rng(options.seed);
      triplets = sample_triplets(static_cast<int>(k), 100000, rng);
    }
  }

  auto evaluate = [&](const Eigen::MatrixXd& coords) {
    Objective o;
    if (options.regularizer == Regularizer::Rank) {
      auto r = rank_loss(coords, costs, options.distance, triplets);
      o.value = r.value;
      o.grads = std::move(r.grads);
    } else {
      auto d = disto_loss(coords, costs, options.distance,
                          options.regularizer == Regularizer::Disto ? ScaleMode::Optimal
                                                                    : ScaleMode::Fixed);
      o.value = d.value;
      o.grads = std::move(d.grads);
    }
    return o;
  };

  // L-BFGS with Armijo backtracking on the flattened coordinates.
  constexpr std::size_t memory = 10;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;
  Objective current = evaluate(fit.coords);
  for (int it = 0; it < options.max_steps; ++it) {
    const Eigen::Map<const Eigen::VectorXd> g(current.grads.data(), current.grads.size());
    if (g.squaredNorm() == 0.0 || current.value == 0.0)
      break;

    Eigen::VectorXd dir = -g;
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
      const auto& [sv, yv] = history[i];
      alpha[i] = sv.dot(dir) / yv.dot(sv);
      dir -= alpha[i] * yv;
    }
    if (!history.empty()) {
      const auto& [sv, yv] = history.back();
      dir *= sv.dot(yv) / yv.squaredNorm();
    } else {
      dir /= std::max(1.0, g.norm());
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& [sv, yv] = history[i];
      const double beta = yv.dot(dir) / yv.dot(sv);
      dir += (alpha[i] - beta) * sv;
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      history.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::MatrixXd candidate;
    Objective next;
    while (step > 1e-20) {
      candidate = fit.coords + step * Eigen::Map<const Eigen::MatrixXd>(dir.data(), fit.coords.rows(),
                                                                        fit.coords.cols());
      try {
        next = evaluate(candidate);
      } catch (const NumericError&) {
        next.value = std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(next.value) && next.value <= current.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      break;

    const double improvement = (current.value - next.value) / std::abs(current.value);
    Eigen::VectorXd sv = step * dir;
    Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(next.grads.data(), next.grads.size()) - g;
    if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
      history.emplace_back(std::move(sv), std::move(yv));
      if (history.size() > memory)
        history.pop_front();
    }
    fit.coords = std::move(candidate);
    current = std::move(next);
    fit.steps = it + 1;
    if (improvement < options.tolerance)
      break;
  }
  fit.value = current.value;
  return fit;
}

TrainResult train(const Dataset& data, const Taxonomy& tax, const FiniteMetric& leaf_costs,
                  const TrainConfig& config)
{
  validate(config);
  validate(data);
  const auto classes = static_cast<Eigen::Index>(data.class_names.size());
  if (leaf_costs.costs.rows() != classes || leaf_costs.costs.cols() != classes)
    throw ValidationError("train: cost matrix size does not match the class count");
  if (tax.leaves().size() != data.class_names.size())
    throw ValidationError("train: dataset classes do not match the taxonomy leaves");

  const Regularizer reg = config.lambda == 0.0 ? Regularizer::None : config.regularizer;
  TrainConfig effective = config;
  effective.regularizer = reg;

  auto init_rng = stream(config.seed, 1);
  auto shuffle_rng = stream(config.seed, 2);
  auto triplet_rng = stream(config.seed, 3);

  TrainResult result;
  Classifier& clf = result.classifier;
  clf.head = config.head;
  clf.distance = config.distance;
  clf.class_names = data.class_names;
  clf.embedding = build_embedding(config.model, static_cast<int>(data.features.cols()),
                                  config.embedding_dim);
  clf.embedding.init_random(init_rng);
  const int m = clf.embedding.output_dim();

  Eigen::MatrixXd proto_costs;
  const bool prototype_head = config.head == Head::Prototypes;
  if (prototype_head) {
    clf.prototypes = PrototypeSet::random(tax, m, config.include_internal_prototypes, init_rng);
    proto_costs = config.include_internal_prototypes ? cost_matrix(tax, NodeSelection::AllNodes).costs
                                                     : leaf_costs.costs;
    if (config.schedule == Schedule::FixedProto) {
      PrototypeFitOptions opts;
      opts.regularizer = reg;
      opts.distance = config.distance;
      opts.seed = config.seed;
      clf.prototypes.coords = fit_prototypes(clf.prototypes.coords, proto_costs, opts).coords;
    }
  } else {
    clf.logits = EmbeddingModel::linear(m, static_cast<int>(classes));
    clf.logits.init_random(init_rng);
  }
  const bool update_prototypes = prototype_head && config.schedule == Schedule::Joint;

  Optimizer optimizer(config.optimizer);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  const auto diverged = [&](int epoch, const std::string& detail) {
    std::ostringstream msg;
    msg << "training diverged at epoch " << epoch << " (lr=" << config.optimizer.lr << ", " << detail << ")";
    return NumericError(msg.str());
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    try {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      double sum_data = 0.0;
      double sum_reg = 0.0;
      std::size_t batches = 0;
      std::optional<double> last_s;

      for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        LabeledBatch batch;
        batch.features.resize(static_cast<Eigen::Index>(stop - start), data.features.cols());
        for (std::size_t i = start; i < stop; ++i) {
          batch.features.row(static_cast<Eigen::Index>(i - start)) =
              data.features.row(static_cast<Eigen::Index>(order[i]));
          batch.labels.push_back(data.labels[order[i]]);
        }

        LossBreakdown loss;
        Eigen::VectorXd model_grads;
        Eigen::VectorXd second_grads;
        if (prototype_head) {
          auto tl = total_loss(batch, clf.embedding, clf.prototypes, proto_costs, effective, triplet_rng);
          loss = tl.breakdown;
          model_grads = std::move(tl.model_grads);
          second_grads = Eigen::Map<const Eigen::VectorXd>(tl.prototype_grads.data(),
                                                           tl.prototype_grads.size());
        } else {
          const auto targets = target_rows(batch.labels, leaf_costs.costs, config.head, config.beta);
          auto ll = logit_loss(batch.features, targets, clf.embedding, clf.logits);
          loss.l_data = ll.value;
          loss.total = ll.value;
          model_grads = std::move(ll.embedding_grads);
          second_grads = std::move(ll.head_grads);
        }
        if (!std::isfinite(loss.total) || !model_grads.allFinite() || !second_grads.allFinite()) {
          std::ostringstream detail;
          detail << "loss=" << loss.total;
          throw diverged(epoch, detail.str());
        }

        optimizer.begin_step();
        optimizer.update(0, clf.embedding.parameters(), model_grads);
        if (update_prototypes) {
          Eigen::Map<Eigen::VectorXd> flat(clf.prototypes.coords.data(), clf.prototypes.coords.size());
          optimizer.update(1, flat, second_grads);
        } else if (!prototype_head) {
          optimizer.update(1, clf.logits.parameters(), second_grads);
        }

        sum_data += loss.l_data;
        sum_reg += loss.l_reg;
        ++batches;
        if (loss.s_star) {
          last_s = loss.s_star;
          result.history.step_s_star.push_back(*loss.s_star);
        }
      }

      EpochRecord rec;
      rec.epoch = epoch;
      rec.loss.l_data = sum_data / static_cast<double>(batches);
      rec.loss.l_reg = sum_reg / static_cast<double>(batches);
      rec.loss.total = rec.loss.l_data + config.lambda * rec.loss.l_reg;
      rec.loss.s_star = last_s;
      std::tie(rec.train_er, rec.train_ac) = error_and_cost(clf, data, leaf_costs.costs);
      result.history.epochs.push_back(rec);
    } catch (const NumericError& e) {
      if (std::string_view(e.what()).starts_with("training diverged"))
        throw;
      throw diverged(epoch, e.what());
    }
  }
  return result;
}

std::string history_csv(const TrainHistory& history)
{
  std::string out = "epoch,l_data,l_reg,total,s_star,train_er,train_ac\n";
  for (const auto& r : history.epochs) {
    out += std::to_string(r.epoch) + "," + csv::format_number(r.loss.l_data) + "," +
           csv::format_number(r.loss.l_reg) + "," + csv::format_number(r.loss.total) + "," +
           (r.loss.s_star ? csv::format_number(*r.loss.s_star) : std::string()) + "," +
           csv::format_number(r.train_er) + "," + csv::format_number(r.train_ac) + "\n";
  }
  return out;
}

} // namespace mgproto
