#include "commands.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/error.hpp"
#include "mgproto/evaluation.hpp"
#include "mgproto/inference.hpp"
#include "mgproto/pipeline.hpp"
#include "mgproto/taxonomy.hpp"
#include "mgproto/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <random>

namespace fs = std::filesystem;

namespace mgproto::cli {

namespace {

std::string resolve(const std::string& path, const std::string& base_dir)
{
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute())
    return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

Json synth_params_json(const GaussianHierarchyParams& p)
{
  Json j;
  j["per_class"] = p.per_class;
  j["dims"] = p.dims;
  j["root_spread"] = p.root_spread;
  j["decay"] = p.decay;
  j["noise"] = p.noise;
  j["seed"] = p.seed;
  return j;
}

GaussianHierarchyParams synth_params_from_json(const Json& j)
{
  GaussianHierarchyParams p;
  p.per_class = j.value("per_class", p.per_class);
  p.dims = j.value("dims", p.dims);
  p.root_spread = j.value("root_spread", p.root_spread);
  p.decay = j.value("decay", p.decay);
  p.noise = j.value("noise", p.noise);
  p.seed = j.value("seed", p.seed);
  return p;
}

void require_file(const std::string& path, const char* what)
{
  if (path.empty() || !fs::exists(path))
    throw ValidationError(std::string(what) + " '" + path + "' does not exist");
}

std::string prototypes_csv(const Eigen::MatrixXd& coords, const std::vector<std::string>& names)
{
  std::string out = "class";
  for (Eigen::Index c = 0; c < coords.cols(); ++c)
    out += ",p" + std::to_string(c);
  out += "\n";
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    out += csv::escape_field(names.at(static_cast<std::size_t>(r)));
    for (Eigen::Index c = 0; c < coords.cols(); ++c)
      out += "," + csv::format_number(coords(r, c));
    out += "\n";
  }
  return out;
}

std::string embeddings_csv(const Eigen::MatrixXd& emb, const Dataset& data)
{
  std::string out;
  for (Eigen::Index c = 0; c < emb.cols(); ++c)
    out += "e" + std::to_string(c) + ",";
  out += "label\n";
  for (Eigen::Index r = 0; r < emb.rows(); ++r) {
    for (Eigen::Index c = 0; c < emb.cols(); ++c)
      out += csv::format_number(emb(r, c)) + ",";
    out += csv::escape_field(data.class_names[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])]) + "\n";
  }
  return out;
}

std::vector<std::string> prototype_names(const PrototypeSet& pi, const Taxonomy& tax)
{
  std::vector<std::string> names;
  for (int id : pi.node_ids)
    names.push_back(tax.node(id).name);
  return names;
}

// ---------------------------------------------------------------- commands

struct CostArgs
{
  std::string taxonomy;
  std::string nodes = "leaves";
  std::string out;
};

int cmd_cost(const CostArgs& a, std::ostream& out)
{
  const Taxonomy tax = load_taxonomy(a.taxonomy);
  const auto sel = a.nodes == "all" ? NodeSelection::AllNodes : NodeSelection::LeavesOnly;
  const std::string text = cost_matrix_csv(cost_matrix(tax, sel));
  if (a.out.empty())
    out << text;
  else
    csv::write_file(a.out, text);
  return exit_ok;
}

struct EmbedArgs
{
  std::string taxonomy;
  int dim = 2;
  std::string regularizer = "disto";
  int steps = 10000;
  std::uint64_t seed = 0;
  std::string distance = "euclidean";
  double delta = 0.1;
  std::string nodes = "leaves";
  std::string out;
  std::string csv_out;
};

int cmd_embed(const EmbedArgs& a, std::ostream& out)
{
  const Taxonomy tax = load_taxonomy(a.taxonomy);
  const bool all = a.nodes == "all";
  const FiniteMetric metric = cost_matrix(tax, all ? NodeSelection::AllNodes : NodeSelection::LeavesOnly);
  if (a.dim < 1)
    throw ValidationError("--dim must be >= 1");
  if (a.steps < 0)
    throw ValidationError("--steps must be >= 0");

  PrototypeFitOptions opts;
  opts.regularizer = regularizer_from_string(a.regularizer);
  if (opts.regularizer == Regularizer::None)
    throw ValidationError("embed needs a regularizer (disto, disto-fixed-scale or rank)");
  opts.distance = {distance_kind_from_string(a.distance), a.delta};
  validate(opts.distance);
  opts.max_steps = a.steps;
  opts.seed = a.seed;

  std::mt19937_64 rng(a.seed);
  const PrototypeSet init = PrototypeSet::random(tax, a.dim, all, rng);
  const PrototypeFit fit = fit_prototypes(init.coords, metric.costs, opts);
  const DistortionReport report = distortion_report(fit.coords, metric.costs, opts.distance);

  Json j;
  j["classes"] = metric.names;
  j["regularizer"] = a.regularizer;
  j["distance"] = to_json(opts.distance);
  j["dim"] = a.dim;
  j["seed"] = a.seed;
  j["steps"] = fit.steps;
  j["objective"] = fit.value;
  j["prototypes"] = matrix_to_json(fit.coords);
  j["report"] = to_json(report);
  if (a.out.empty())
    out << j.dump(2) << "\n";
  else
    write_json_file(a.out, j);
  if (!a.csv_out.empty())
    csv::write_file(a.csv_out, prototypes_csv(fit.coords, metric.names));
  return exit_ok;
}

struct TrainArgs
{
  std::string config;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  int threads = 1;
};

Dataset load_run_dataset(const RunConfig& rc, const Taxonomy& tax)
{
  if (rc.dataset.synthetic)
    return gen_hierarchical_gaussians(tax, *rc.dataset.synthetic);
  require_file(rc.dataset.csv_path, "dataset");
  return load_csv(rc.dataset.csv_path, rc.dataset.label_column, leaf_names(tax));
}

struct SeedOutcome
{
  std::uint64_t seed = 0;
  EvalReport report;
};

SeedOutcome run_seed(const RunConfig& rc, std::uint64_t seed, const Taxonomy& tax,
                     const FiniteMetric& leaves, const SplitResult& split, const fs::path& dir)
{
  TrainConfig cfg = rc.train;
  cfg.seed = seed;
  const TrainResult result = train(split.train, tax, leaves, cfg);
  const Dataset& eval_set = split.test.size() > 0 ? split.test : split.train;
  EvalReport report = evaluate_classifier(result.classifier, tax, eval_set, scheme_from_string(rc.scheme));

  const fs::path seed_dir = dir / ("seed_" + std::to_string(seed));
  fs::create_directories(seed_dir);
  write_json_file((seed_dir / "checkpoint.json").string(), checkpoint_to_json(result.classifier, tax));
  csv::write_file((seed_dir / "history.csv").string(), history_csv(result.history));
  write_json_file((seed_dir / "history.json").string(), to_json(result.history));
  Json report_json = to_json(report);
  report_json["eval_split"] = split.test.size() > 0 ? "test" : "train";
  write_json_file((seed_dir / "report.json").string(), report_json);
  csv::write_file((seed_dir / "confusion.csv").string(), confusion_csv(report));
  if (result.classifier.head == Head::Prototypes)
    csv::write_file((seed_dir / "prototypes.csv").string(),
                    prototypes_csv(result.classifier.prototypes.coords,
                                   prototype_names(result.classifier.prototypes, tax)));
  csv::write_file((seed_dir / "embeddings.csv").string(),
                  embeddings_csv(result.classifier.embed(eval_set.features), eval_set));
  return {seed, std::move(report)};
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err)
{
  require_file(a.config, "config");
  const fs::path config_path(a.config);
  RunConfig rc = run_config_from_json(read_json_file(a.config), config_path.parent_path().string());
  if (!a.seeds.empty())
    rc.seeds = a.seeds;
  if (!a.out_dir.empty()) {
    rc.output_dir = a.out_dir;
  } else if (rc.output_dir.empty()) {
    const char* root = std::getenv(output_root_env);
    rc.output_dir = (fs::path(root ? root : "runs") / config_path.stem()).string();
  }
  if (rc.seeds.empty())
    throw ValidationError("no seeds to run");
  require_file(rc.taxonomy_path, "taxonomy");
  scheme_from_string(rc.scheme);
  aggregate({0.0}, rc.aggregation);

  const Taxonomy tax = load_taxonomy(rc.taxonomy_path);
  const FiniteMetric leaves = cost_matrix(tax, NodeSelection::LeavesOnly);
  const Dataset data = load_run_dataset(rc, tax);
  const SplitResult parts = split(data, rc.test_fraction, rc.split_seed);
  for (const auto& w : parts.warnings)
    err << "warning: " << w << "\n";

  const fs::path dir(rc.output_dir);
  fs::create_directories(dir);
  write_json_file((dir / "config.json").string(), to_json(rc));

  std::vector<SeedOutcome> outcomes(rc.seeds.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, a.threads));
  for (std::size_t start = 0; start < rc.seeds.size(); start += workers) {
    std::vector<std::future<SeedOutcome>> jobs;
    for (std::size_t i = start; i < std::min(rc.seeds.size(), start + workers); ++i)
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run_seed,
                                std::cref(rc), rc.seeds[i], std::cref(tax), std::cref(leaves),
                                std::cref(parts), std::cref(dir)));
    for (std::size_t i = 0; i < jobs.size(); ++i)
      outcomes[start + i] = jobs[i].get();
  }

  Json per_seed = Json::array();
  std::vector<double> ers, acs, sfds;
  for (const auto& o : outcomes) {
    Json s;
    s["seed"] = o.seed;
    s["er"] = o.report.er;
    s["ac"] = o.report.ac;
    s["scale_free_distortion"] =
        o.report.distortion ? Json(o.report.distortion->scale_free_distortion) : Json(nullptr);
    per_seed.push_back(s);
    ers.push_back(o.report.er);
    acs.push_back(o.report.ac);
    if (o.report.distortion)
      sfds.push_back(o.report.distortion->scale_free_distortion);
  }
  Json agg;
  agg["aggregation"] = rc.aggregation;
  agg["scheme"] = rc.scheme;
  agg["seeds"] = rc.seeds;
  agg["er"] = aggregate(ers, rc.aggregation);
  agg["ac"] = aggregate(acs, rc.aggregation);
  agg["scale_free_distortion"] = sfds.size() == outcomes.size() ? Json(aggregate(sfds, rc.aggregation)) : Json(nullptr);
  agg["per_seed"] = per_seed;
  write_json_file((dir / "aggregate.json").string(), agg);
  out << "ER " << agg["er"].get<double>() << "  AC " << agg["ac"].get<double>() << "  ("
      << rc.aggregation << " over " << rc.seeds.size() << " seed(s)) -> " << dir.string() << "\n";
  return exit_ok;
}

struct EvalArgs
{
  std::string checkpoint;
  std::string dataset;
  std::string taxonomy;
  std::string scheme = "max-prob";
  std::string label_column = "label";
  std::string out_dir = ".";
  bool exhaustive = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
  require_file(a.checkpoint, "checkpoint");
  require_file(a.dataset, "dataset");
  require_file(a.taxonomy, "taxonomy");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Taxonomy tax = load_taxonomy(a.taxonomy);
  if (leaf_names(tax) != ckpt.classifier.class_names)
    throw ValidationError("taxonomy leaves do not match the checkpoint classes");
  const Dataset data = load_csv(a.dataset, a.label_column, ckpt.classifier.class_names);
  const EvalReport report =
      evaluate_classifier(ckpt.classifier, tax, data, scheme_from_string(a.scheme), !a.exhaustive);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_json_file((dir / "report.json").string(), to_json(report));
  csv::write_file((dir / "confusion.csv").string(), confusion_csv(report));
  out << "ER " << report.er << "  AC " << report.ac;
  if (report.l_er)
    out << "  L-ER " << *report.l_er << "  R-ER " << *report.r_er;
  out << "\n";
  return exit_ok;
}

struct InferArgs
{
  std::string checkpoint;
  std::string features;
  std::string scheme = "max-prob";
  std::string label_column;
  std::string out;
  bool exhaustive = false;
};

int cmd_infer(const InferArgs& a, std::ostream& out)
{
  require_file(a.checkpoint, "checkpoint");
  require_file(a.features, "features");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Dataset data = load_csv(a.features, a.label_column, ckpt.classifier.class_names);
  if (data.features.cols() != ckpt.classifier.embedding.input_dim())
    throw ValidationError("features have " + std::to_string(data.features.cols()) +
                          " columns, model expects " +
                          std::to_string(ckpt.classifier.embedding.input_dim()));
  const Predictor predictor(ckpt.classifier, ckpt.taxonomy, scheme_from_string(a.scheme), !a.exhaustive);
  const auto predictions = predictor.predict(data.features);
  const std::string text =
      predictions_csv(predictions, predictor.candidate_metric(), ckpt.classifier.class_names);
  if (a.out.empty())
    out << text;
  else
    csv::write_file(a.out, text);
  return exit_ok;
}

struct SynthArgs
{
  std::string taxonomy;
  GaussianHierarchyParams params;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out)
{
  const Taxonomy tax = load_taxonomy(a.taxonomy);
  const Dataset data = gen_hierarchical_gaussians(tax, a.params);
  csv::write_file(a.out, dataset_csv(data));
  Json side = synth_params_json(a.params);
  side["taxonomy"] = a.taxonomy;
  side["samples"] = data.size();
  write_json_file(a.out + ".json", side);
  out << "wrote " << data.size() << " samples to " << a.out << "\n";
  return exit_ok;
}

} // namespace

RunConfig run_config_from_json(const Json& j, const std::string& base_dir)
{
  if (!j.is_object())
    throw ValidationError("run config must be a JSON object");
  try {
    RunConfig rc;
    rc.taxonomy_path = resolve(j.at("taxonomy").get<std::string>(), base_dir);
    const Json& ds = j.at("dataset");
    if (ds.contains("synthetic")) {
      rc.dataset.synthetic = synth_params_from_json(ds["synthetic"]);
    } else {
      rc.dataset.csv_path = resolve(ds.at("csv").get<std::string>(), base_dir);
      rc.dataset.label_column = ds.value("label_column", rc.dataset.label_column);
    }
    rc.test_fraction = j.value("test_fraction", rc.test_fraction);
    rc.split_seed = j.value("split_seed", rc.split_seed);
    if (j.contains("seeds"))
      rc.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    rc.aggregation = j.value("aggregation", rc.aggregation);
    rc.output_dir = resolve(j.value("output_dir", std::string()), base_dir);
    rc.scheme = j.value("scheme", rc.scheme);
    if (j.contains("train"))
      rc.train = train_config_from_json(j["train"]);
    return rc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
}

Json to_json(const RunConfig& rc)
{
  Json j;
  j["taxonomy"] = rc.taxonomy_path;
  Json ds;
  if (rc.dataset.synthetic) {
    ds["synthetic"] = synth_params_json(*rc.dataset.synthetic);
  } else {
    ds["csv"] = rc.dataset.csv_path;
    ds["label_column"] = rc.dataset.label_column;
  }
  j["dataset"] = ds;
  j["test_fraction"] = rc.test_fraction;
  j["split_seed"] = rc.split_seed;
  j["seeds"] = rc.seeds;
  j["aggregation"] = rc.aggregation;
  j["output_dir"] = rc.output_dir;
  j["scheme"] = rc.scheme;
  j["train"] = mgproto::to_json(rc.train);
  return j;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Metric-guided prototype learning: cost matrices, prototype embedding, training, "
               "cost-aware inference and evaluation."};
  app.name("mgproto");
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads (1 guarantees byte-identical outputs)")
      ->check(CLI::PositiveNumber);

  CostArgs cost;
  auto* c_cost = app.add_subcommand("cost", "Write the shortest-path cost matrix of a taxonomy as CSV");
  c_cost->add_option("taxonomy", cost.taxonomy, "Taxonomy file (edge list or JSON tree)")->required();
  c_cost->add_option("--nodes", cost.nodes, "leaves or all")->check(CLI::IsMember({"leaves", "all"}));
  c_cost->add_option("--out", cost.out, "Output CSV (stdout when omitted)");

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "Fit prototypes to a taxonomy metric with the regularizer alone");
  c_embed->add_option("taxonomy", embed.taxonomy, "Taxonomy file")->required();
  c_embed->add_option("--dim", embed.dim, "Embedding dimension");
  c_embed->add_option("--regularizer", embed.regularizer, "disto, disto-fixed-scale or rank")
      ->check(CLI::IsMember({"disto", "disto-fixed-scale", "rank"}));
  c_embed->add_option("--steps", embed.steps, "Maximum descent steps");
  c_embed->add_option("--seed", embed.seed, "Initialization seed");
  c_embed->add_option("--distance", embed.distance, "euclidean, squared-euclidean or huber");
  c_embed->add_option("--delta", embed.delta, "Huber delta");
  c_embed->add_option("--nodes", embed.nodes, "leaves or all")->check(CLI::IsMember({"leaves", "all"}));
  c_embed->add_option("--out", embed.out, "Output JSON (stdout when omitted)");
  c_embed->add_option("--csv", embed.csv_out, "Also write prototype coordinates as CSV");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train one model per seed and aggregate test metrics");
  c_train->add_option("config", tr.config, "Run configuration (JSON)")->required();
  c_train->add_option("--out-dir", tr.out_dir, "Output directory (overrides the config)");
  c_train->add_option("--seeds", tr.seeds, "Seed list (overrides the config)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled CSV dataset");
  c_eval->add_option("checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
  c_eval->add_option("dataset", ev.dataset, "Dataset CSV")->required();
  c_eval->add_option("taxonomy", ev.taxonomy, "Taxonomy file")->required();
  c_eval->add_option("--scheme", ev.scheme, "max-prob, min-ec or any-node")
      ->check(CLI::IsMember({"max-prob", "min-ec", "any-node"}));
  c_eval->add_option("--label-column", ev.label_column, "Name of the label column");
  c_eval->add_option("--out-dir", ev.out_dir, "Directory for report.json and confusion.csv");
  c_eval->add_flag("--exhaustive", ev.exhaustive, "Linear scan instead of the KD-tree");

  InferArgs inf;
  auto* c_infer = app.add_subcommand("infer", "Predict classes for a feature CSV");
  c_infer->add_option("checkpoint", inf.checkpoint, "Checkpoint JSON")->required();
  c_infer->add_option("features", inf.features, "Feature CSV")->required();
  c_infer->add_option("--scheme", inf.scheme, "max-prob, min-ec or any-node")
      ->check(CLI::IsMember({"max-prob", "min-ec", "any-node"}));
  c_infer->add_option("--label-column", inf.label_column, "Column to skip (e.g. labels)");
  c_infer->add_option("--out", inf.out, "Output CSV (stdout when omitted)");
  c_infer->add_flag("--exhaustive", inf.exhaustive, "Linear scan instead of the KD-tree");

  SynthArgs syn;
  auto* c_synth = app.add_subcommand("synth", "Generate a hierarchy-aligned Gaussian dataset");
  c_synth->add_option("taxonomy", syn.taxonomy, "Taxonomy file")->required();
  c_synth->add_option("--per-class", syn.params.per_class, "Samples per leaf class");
  c_synth->add_option("--dims", syn.params.dims, "Feature dimension");
  c_synth->add_option("--root-spread", syn.params.root_spread, "Offset length below the root");
  c_synth->add_option("--decay", syn.params.decay, "Offset shrink factor per level");
  c_synth->add_option("--noise", syn.params.noise, "Sample noise standard deviation");
  c_synth->add_option("--seed", syn.params.seed, "Generator seed");
  c_synth->add_option("--out", syn.out, "Output CSV (a .json sidecar is written next to it)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }

  tr.threads = threads;
  try {
    if (*c_cost)
      return cmd_cost(cost, out);
    if (*c_embed)
      return cmd_embed(embed, out);
    if (*c_train)
      return cmd_train(tr, out, err);
    if (*c_eval)
      return cmd_eval(ev, out);
    if (*c_infer)
      return cmd_infer(inf, out);
    if (*c_synth)
      return cmd_synth(syn, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_usage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  std::vector<const char*> argv{"mgproto"};
  for (const auto& a : args)
    argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace mgproto::cli
