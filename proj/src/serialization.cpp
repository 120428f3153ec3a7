#include "mgproto/serialization.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mgproto {

namespace {

Json optional_number(const std::optional<double>& v)
{
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
T get_or(const Json& j, const char* key, const T& fallback)
{
  if (!j.contains(key) || j[key].is_null())
    return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

Json vector_to_json(const Eigen::VectorXd& v)
{
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const Json& j)
{
  if (!j.is_array())
    throw ValidationError("expected a number array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Json model_to_json(const EmbeddingModel& m)
{
  Json j;
  j["architecture"] = to_string(m.architecture());
  j["layers"] = m.layer_sizes();
  j["activation"] = to_string(m.activation());
  j["parameters"] = vector_to_json(m.parameters());
  return j;
}

EmbeddingModel model_from_json(const Json& j)
{
  const auto arch = architecture_from_string(j.at("architecture").get<std::string>());
  const auto layers = j.at("layers").get<std::vector<int>>();
  if (layers.size() < 2)
    throw ValidationError("checkpoint: model needs at least two layer sizes");
  EmbeddingModel m = EmbeddingModel::identity(layers.front());
  if (arch == Architecture::Linear)
    m = EmbeddingModel::linear(layers[0], layers[1]);
  else if (arch == Architecture::Mlp)
    m = EmbeddingModel::mlp(layers, activation_from_string(j.value("activation", "relu")));
  m.set_parameters(vector_from_json(j.at("parameters")));
  return m;
}

} // namespace

Json to_json(const DistortionReport& r)
{
  Json j;
  j["distortion"] = r.distortion;
  j["scale_free_distortion"] = r.scale_free_distortion;
  j["s_star_l1"] = r.s_star_l1;
  j["s_star_l2"] = r.s_star_l2;
  j["pair_count"] = r.pair_count;
  return j;
}

Json to_json(const EvalReport& r)
{
  Json j;
  j["n"] = r.n;
  j["er"] = r.er;
  j["ac"] = r.ac;
  j["l_er"] = optional_number(r.l_er);
  j["r_er"] = optional_number(r.r_er);
  j["internal_predictions"] = r.internal_predictions;
  j["distortion"] = r.distortion ? to_json(*r.distortion) : Json(nullptr);
  j["classes"] = r.metric.names;
  Json conf = Json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < r.confusion.cols(); ++c)
      row.push_back(r.confusion(i, c));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  return j;
}

Json to_json(const TrainHistory& h)
{
  Json epochs = Json::array();
  for (const auto& r : h.epochs) {
    Json e;
    e["epoch"] = r.epoch;
    e["l_data"] = r.loss.l_data;
    e["l_reg"] = r.loss.l_reg;
    e["total"] = r.loss.total;
    e["s_star"] = optional_number(r.loss.s_star);
    e["train_er"] = r.train_er;
    e["train_ac"] = r.train_ac;
    epochs.push_back(e);
  }
  Json j;
  j["epochs"] = epochs;
  j["step_s_star"] = h.step_s_star;
  return j;
}

Json to_json(const DistanceSpec& spec)
{
  Json j;
  j["kind"] = to_string(spec.kind);
  j["delta"] = spec.delta;
  return j;
}

DistanceSpec distance_spec_from_json(const Json& j)
{
  DistanceSpec spec;
  spec.kind = distance_kind_from_string(get_or<std::string>(j, "kind", "euclidean"));
  spec.delta = get_or(j, "delta", spec.delta);
  validate(spec);
  return spec;
}

Json to_json(const TrainConfig& c)
{
  Json j;
  j["lambda"] = c.lambda;
  j["regularizer"] = to_string(c.regularizer);
  j["head"] = to_string(c.head);
  j["beta"] = c.beta;
  j["distance"] = to_json(c.distance);
  j["embedding_dim"] = c.embedding_dim;
  j["include_internal_prototypes"] = c.include_internal_prototypes;
  j["schedule"] = to_string(c.schedule);
  Json opt;
  opt["kind"] = c.optimizer.kind == OptimizerConfig::Kind::Adam ? "adam" : "sgd";
  opt["lr"] = c.optimizer.lr;
  opt["momentum"] = c.optimizer.momentum;
  opt["beta1"] = c.optimizer.beta1;
  opt["beta2"] = c.optimizer.beta2;
  opt["eps"] = c.optimizer.eps;
  j["optimizer"] = opt;
  Json model;
  model["architecture"] = to_string(c.model.architecture);
  model["hidden"] = c.model.hidden;
  model["activation"] = to_string(c.model.activation);
  j["model"] = model;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["triplet_count"] = c.triplet_count;
  return j;
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& base)
{
  if (!j.is_object())
    throw ValidationError("train config must be a JSON object");
  TrainConfig c = base;
  c.lambda = get_or(j, "lambda", c.lambda);
  c.regularizer = regularizer_from_string(get_or(j, "regularizer", to_string(c.regularizer)));
  c.head = head_from_string(get_or(j, "head", to_string(c.head)));
  c.beta = get_or(j, "beta", c.beta);
  if (j.contains("distance")) {
    Json d = to_json(c.distance);
    d.update(j["distance"]);
    c.distance = distance_spec_from_json(d);
  }
  c.embedding_dim = get_or(j, "embedding_dim", c.embedding_dim);
  c.include_internal_prototypes = get_or(j, "include_internal_prototypes", c.include_internal_prototypes);
  c.schedule = schedule_from_string(get_or(j, "schedule", to_string(c.schedule)));
  if (j.contains("optimizer")) {
    const Json& o = j["optimizer"];
    const auto kind = get_or<std::string>(o, "kind", c.optimizer.kind == OptimizerConfig::Kind::Adam ? "adam" : "sgd");
    if (kind == "adam")
      c.optimizer.kind = OptimizerConfig::Kind::Adam;
    else if (kind == "sgd")
      c.optimizer.kind = OptimizerConfig::Kind::Sgd;
    else
      throw ValidationError("unknown optimizer '" + kind + "'");
    c.optimizer.lr = get_or(o, "lr", c.optimizer.lr);
    c.optimizer.momentum = get_or(o, "momentum", c.optimizer.momentum);
    c.optimizer.beta1 = get_or(o, "beta1", c.optimizer.beta1);
    c.optimizer.beta2 = get_or(o, "beta2", c.optimizer.beta2);
    c.optimizer.eps = get_or(o, "eps", c.optimizer.eps);
  }
  if (j.contains("model")) {
    const Json& m = j["model"];
    c.model.architecture = architecture_from_string(get_or(m, "architecture", to_string(c.model.architecture)));
    c.model.hidden = get_or(m, "hidden", c.model.hidden);
    c.model.activation = activation_from_string(get_or(m, "activation", to_string(c.model.activation)));
  }
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.seed = get_or(j, "seed", c.seed);
  c.triplet_count = get_or(j, "triplet_count", c.triplet_count);
  validate(c);
  return c;
}

Json to_json(const Taxonomy& tax)
{
  Json nodes = Json::array();
  for (const auto& n : tax.nodes()) {
    Json j;
    j["name"] = n.name;
    j["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
    j["weight"] = n.weight;
    nodes.push_back(j);
  }
  return nodes;
}

Taxonomy taxonomy_from_json(const Json& j)
{
  if (!j.is_array())
    throw ValidationError("taxonomy node list must be an array");
  std::vector<TaxonomyNode> nodes;
  for (const auto& n : j) {
    TaxonomyNode node;
    node.name = n.at("name").get<std::string>();
    if (n.contains("parent") && !n["parent"].is_null())
      node.parent = n["parent"].get<int>();
    node.weight = n.value("weight", 1.0);
    nodes.push_back(std::move(node));
  }
  return Taxonomy::from_nodes(std::move(nodes));
}

Json matrix_to_json(const Eigen::MatrixXd& m)
{
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j)
{
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw ValidationError("matrix shape does not match its data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = data[i++].get<double>();
  return m;
}

Json checkpoint_to_json(const Classifier& clf, const Taxonomy& tax)
{
  Json j;
  j["format"] = "mgproto-checkpoint";
  j["version"] = checkpoint_version;
  j["head"] = to_string(clf.head);
  j["distance"] = to_json(clf.distance);
  j["classes"] = clf.class_names;
  j["model"] = model_to_json(clf.embedding);
  if (clf.head == Head::Prototypes) {
    Json p;
    p["coords"] = matrix_to_json(clf.prototypes.coords);
    p["node_ids"] = clf.prototypes.node_ids;
    p["leaf_rows"] = clf.prototypes.leaf_rows;
    p["includes_internal"] = clf.prototypes.includes_internal;
    j["prototypes"] = p;
  } else {
    j["logits"] = model_to_json(clf.logits);
  }
  j["taxonomy"] = to_json(tax);
  return j;
}

Checkpoint checkpoint_from_json(const Json& j)
{
  try {
    if (j.value("format", "") != "mgproto-checkpoint")
      throw ValidationError("not a checkpoint file");
    if (j.at("version").get<int>() != checkpoint_version)
      throw ValidationError("unsupported checkpoint version " + j.at("version").dump());
    Classifier clf;
    clf.head = head_from_string(j.at("head").get<std::string>());
    clf.distance = distance_spec_from_json(j.at("distance"));
    clf.class_names = j.at("classes").get<std::vector<std::string>>();
    clf.embedding = model_from_json(j.at("model"));
    if (clf.head == Head::Prototypes) {
      const auto& p = j.at("prototypes");
      clf.prototypes.coords = matrix_from_json(p.at("coords"));
      clf.prototypes.node_ids = p.at("node_ids").get<std::vector<int>>();
      clf.prototypes.leaf_rows = p.at("leaf_rows").get<std::vector<int>>();
      clf.prototypes.includes_internal = p.value("includes_internal", false);
      validate(clf.prototypes);
      if (clf.prototypes.leaf_rows.size() != clf.class_names.size())
        throw ValidationError("checkpoint: prototype leaf rows do not match the classes");
      if (clf.prototypes.dim() != clf.embedding.output_dim())
        throw ValidationError("checkpoint: prototype dimension does not match the model");
    } else {
      clf.logits = model_from_json(j.at("logits"));
    }
    Taxonomy tax = taxonomy_from_json(j.at("taxonomy"));
    return {std::move(clf), std::move(tax)};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::string& path)
{
  return checkpoint_from_json(read_json_file(path));
}

std::string confusion_csv(const EvalReport& r)
{
  std::string out = "true\\predicted";
  for (const auto& name : r.metric.names)
    out += "," + csv::escape_field(name);
  out += "\n";
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    out += csv::escape_field(r.metric.names[static_cast<std::size_t>(i)]);
    for (Eigen::Index c = 0; c < r.confusion.cols(); ++c)
      out += "," + std::to_string(r.confusion(i, c));
    out += "\n";
  }
  return out;
}

Json read_json_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

} // namespace mgproto
