#include "mgproto/data.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

namespace mgproto {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const
{
  Dataset out;
  out.class_names = class_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    if (!labels.empty())
      out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

void validate(const Dataset& data)
{
  if (data.labels.empty())
    throw ValidationError("empty dataset");
  if (static_cast<std::size_t>(data.features.rows()) != data.labels.size())
    throw ValidationError("dataset: feature rows and labels differ in count");
  if (!data.features.allFinite())
    throw ValidationError("dataset: non-finite feature values");
  for (int z : data.labels)
    if (z < 0 || static_cast<std::size_t>(z) >= data.class_names.size())
      throw ValidationError("dataset: label " + std::to_string(z) + " is not a known class");
}

std::vector<std::string> leaf_names(const Taxonomy& tax)
{
  std::vector<std::string> out;
  for (int id : tax.leaves())
    out.push_back(tax.node(id).name);
  return out;
}

Eigen::MatrixXd hierarchical_means(const Taxonomy& tax, const GaussianHierarchyParams& params,
                                   std::mt19937_64& rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tax.size()), params.dims);
  std::vector<int> queue{tax.root()};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int id = queue[q];
    for (int child : tax.children(id)) {
      Eigen::VectorXd dir(params.dims);
      do {
        for (int c = 0; c < params.dims; ++c)
          dir(c) = normal(rng);
      } while (dir.norm() == 0.0);
      dir.normalize();
      const double len = params.root_spread * std::pow(params.decay, tax.depth(id));
      means.row(child) = means.row(id) + len * dir.transpose();
      queue.push_back(child);
    }
  }
  return means;
}

Dataset gen_hierarchical_gaussians(const Taxonomy& tax, const GaussianHierarchyParams& params)
{
  if (params.per_class < 1)
    throw ValidationError("generator: per_class must be >= 1");
  if (params.dims < 2)
    throw ValidationError("generator: dims must be >= 2");
  if (!(params.decay >= 0.0 && params.decay < 1.0))
    throw ValidationError("generator: decay must lie in [0, 1)");
  if (!(params.noise >= 0.0) || !(params.root_spread >= 0.0))
    throw ValidationError("generator: spread and noise must be >= 0");
  if (tax.leaves().empty())
    throw ValidationError("generator: taxonomy has no leaves");

  std::mt19937_64 rng(params.seed);
  const Eigen::MatrixXd means = hierarchical_means(tax, params, rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset data;
  data.class_names = leaf_names(tax);
  const auto n = static_cast<Eigen::Index>(tax.leaves().size()) * params.per_class;
  data.features.resize(n, params.dims);
  data.labels.reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < tax.leaves().size(); ++k) {
    const auto mean = means.row(tax.leaves()[k]);
    for (int s = 0; s < params.per_class; ++s, ++row) {
      for (int c = 0; c < params.dims; ++c)
        data.features(row, c) = mean(c) + params.noise * normal(rng);
      data.labels.push_back(static_cast<int>(k));
    }
  }
  return data;
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::vector<std::string>& leaf_names)
{
  const auto table = csv::read_file(path);
  if (table.header.empty())
    throw ParseError("'" + path + "': empty file");
  int label_col = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (!label_column.empty() && table.header[c] == label_column)
      label_col = static_cast<int>(c);
  if (!label_column.empty() && label_col < 0)
    throw ValidationError("'" + path + "': no label column '" + label_column + "'");
  if (table.rows.empty())
    throw ValidationError("'" + path + "': empty dataset");

  std::unordered_map<std::string, int> class_index;
  for (std::size_t i = 0; i < leaf_names.size(); ++i)
    class_index.emplace(leaf_names[i], static_cast<int>(i));

  const auto feature_cols = static_cast<Eigen::Index>(table.header.size()) - (label_col >= 0 ? 1 : 0);
  if (feature_cols < 1)
    throw ValidationError("'" + path + "': no feature columns");
  Dataset data;
  data.class_names = leaf_names;
  data.features.resize(static_cast<Eigen::Index>(table.rows.size()), feature_cols);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Eigen::Index out_col = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<int>(c) == label_col) {
        const auto it = class_index.find(row[c]);
        if (it == class_index.end())
          throw ValidationError("'" + path + "' row " + std::to_string(r + 1) + ": unknown label '" +
                                row[c] + "'");
        data.labels.push_back(it->second);
        continue;
      }
      const std::string& cell = row[c];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = cell.data() + cell.size();
      while (begin < end && *begin == ' ')
        ++begin;
      auto [p, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc{} || p != end || !std::isfinite(value))
        throw ParseError("'" + path + "' row " + std::to_string(r + 1) + ", column '" +
                         table.header[c] + "': non-numeric value '" + cell + "'");
      data.features(static_cast<Eigen::Index>(r), out_col++) = value;
    }
  }
  return data;
}

std::string dataset_csv(const Dataset& data)
{
  std::string out;
  for (Eigen::Index c = 0; c < data.features.cols(); ++c)
    out += "x" + std::to_string(c) + ",";
  out += "label\n";
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c)
      out += csv::format_number(data.features(r, c)) + ",";
    out += csv::escape_field(data.class_names.at(static_cast<std::size_t>(data.labels.at(static_cast<std::size_t>(r))))) + "\n";
  }
  return out;
}

SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed)
{
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("split: test fraction must lie in (0, 1)");
  validate(data);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> by_class(data.class_names.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  SplitResult out;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    if (rows.empty())
      continue;
    if (rows.size() < 2) {
      out.warnings.push_back("class '" + data.class_names[k] + "' has " +
                             std::to_string(rows.size()) +
                             " sample(s) and cannot be stratified; assigned to train");
      train_rows.insert(train_rows.end(), rows.begin(), rows.end());
      continue;
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n = static_cast<long>(rows.size());
    const long n_test = std::clamp(std::lround(test_fraction * static_cast<double>(n)), 1L, n - 1);
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + n_test);
    train_rows.insert(train_rows.end(), rows.begin() + n_test, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  out.train = data.subset(train_rows);
  out.test = data.subset(test_rows);
  return out;
}

} // namespace mgproto
