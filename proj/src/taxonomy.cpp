#include "mgproto/taxonomy.hpp"

#include "mgproto/csv.hpp"
#include "mgproto/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace mgproto {

Taxonomy Taxonomy::from_nodes(std::vector<TaxonomyNode> nodes)
{
  if (nodes.empty())
    throw ValidationError("taxonomy: no nodes");
  const int n = static_cast<int>(nodes.size());

  std::unordered_map<std::string, int> by_name;
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes[i];
    if (node.name.empty())
      throw ValidationError("taxonomy: node " + std::to_string(i) + " has an empty name");
    if (!by_name.emplace(node.name, i).second)
      throw ValidationError("taxonomy: duplicate node name '" + node.name + "'");
    if (node.parent) {
      if (*node.parent < 0 || *node.parent >= n)
        throw ValidationError("taxonomy: orphan node '" + node.name + "' references missing parent " +
                              std::to_string(*node.parent));
      if (!(node.weight > 0.0) || !std::isfinite(node.weight))
        throw ValidationError("taxonomy: edge '" + node.name + "' has non-positive weight");
    }
  }

  // 0 = unvisited, 1 = on current walk, 2 = known to reach a root
  std::vector<char> state(nodes.size(), 0);
  for (int start = 0; start < n; ++start) {
    std::vector<int> walk;
    int cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      walk.push_back(cur);
      if (!nodes[cur].parent)
        break;
      cur = *nodes[cur].parent;
    }
    if (state[cur] == 1 && nodes[cur].parent)
      throw ValidationError("taxonomy: cycle detected through node '" + nodes[cur].name + "'");
    for (int w : walk)
      state[w] = 2;
  }

  Taxonomy tax;
  tax.children_.resize(nodes.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (nodes[i].parent) {
      tax.children_[*nodes[i].parent].push_back(i);
    } else {
      ++roots;
      tax.root_ = i;
    }
  }
  if (roots != 1)
    throw ValidationError("taxonomy: multiple roots (" + std::to_string(roots) + ")");

  tax.is_leaf_.resize(nodes.size());
  tax.depth_.assign(nodes.size(), -1);
  tax.root_distance_.assign(nodes.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    tax.is_leaf_[i] = tax.children_[i].empty();
    if (tax.is_leaf_[i])
      tax.leaves_.push_back(i);
  }
  // Breadth-first from the root so parents are resolved before children.
  std::vector<int> queue{tax.root_};
  tax.depth_[tax.root_] = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int id = queue[q];
    for (int c : tax.children_[id]) {
      tax.depth_[c] = tax.depth_[id] + 1;
      tax.root_distance_[c] = tax.root_distance_[id] + nodes[c].weight;
      queue.push_back(c);
    }
  }
  tax.nodes_ = std::move(nodes);
  return tax;
}

std::optional<int> Taxonomy::find(std::string_view name) const
{
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name)
      return static_cast<int>(i);
  return std::nullopt;
}

std::optional<int> Taxonomy::leaf_index(int id) const
{
  for (std::size_t i = 0; i < leaves_.size(); ++i)
    if (leaves_[i] == id)
      return static_cast<int>(i);
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  if (line.find('\t') != std::string_view::npos) {
    std::size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      out.push_back(trim(line.substr(pos, tab == std::string_view::npos ? tab : tab - pos)));
      if (tab == std::string_view::npos)
        break;
      pos = tab + 1;
    }
  } else {
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto begin = line.find_first_not_of(" ", pos);
      if (begin == std::string_view::npos)
        break;
      const auto end = line.find(' ', begin);
      out.push_back(line.substr(begin, end == std::string_view::npos ? end : end - begin));
      pos = end == std::string_view::npos ? line.size() : end;
    }
  }
  return out;
}

Taxonomy parse_edge_list(std::string_view text)
{
  std::vector<TaxonomyNode> nodes;
  std::unordered_map<std::string, int> ids;
  auto intern = [&](std::string_view name) {
    auto [it, inserted] = ids.emplace(std::string(name), static_cast<int>(nodes.size()));
    if (inserted)
      nodes.push_back({std::string(name), std::nullopt, 1.0});
    return it->second;
  };

  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;

    const auto fields = split_fields(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty())
      throw ParseError("taxonomy line " + std::to_string(line_no) +
                       ": expected 'child<TAB>parent[<TAB>weight]'");
    double weight = 1.0;
    if (fields.size() == 3) {
      const auto w = fields[2];
      auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
      if (ec != std::errc{} || p != w.data() + w.size())
        throw ParseError("taxonomy line " + std::to_string(line_no) + ": bad weight '" +
                         std::string(w) + "'");
    }
    const int child = intern(fields[0]);
    const int parent = intern(fields[1]);
    if (nodes[child].parent)
      throw ValidationError("taxonomy line " + std::to_string(line_no) + ": duplicate node '" +
                            nodes[child].name + "' (second parent)");
    nodes[child].parent = parent;
    nodes[child].weight = weight;
  }
  return Taxonomy::from_nodes(std::move(nodes));
}

void collect_json(const nlohmann::json& obj, std::optional<int> parent,
                  std::vector<TaxonomyNode>& nodes)
{
  if (!obj.is_object() || !obj.contains("name") || !obj["name"].is_string())
    throw ParseError("taxonomy json: every node needs a string 'name'");
  TaxonomyNode node{obj["name"].get<std::string>(), parent, 1.0};
  if (obj.contains("weight")) {
    if (!obj["weight"].is_number())
      throw ParseError("taxonomy json: 'weight' of '" + node.name + "' must be a number");
    node.weight = obj["weight"].get<double>();
  }
  const int id = static_cast<int>(nodes.size());
  nodes.push_back(std::move(node));
  if (obj.contains("children")) {
    const auto& children = obj["children"];
    if (!children.is_array())
      throw ParseError("taxonomy json: 'children' must be an array");
    for (const auto& child : children)
      collect_json(child, id, nodes);
  }
}

Taxonomy parse_json_tree(std::string_view text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("taxonomy json: ") + e.what());
  }
  std::vector<TaxonomyNode> nodes;
  collect_json(doc, std::nullopt, nodes);
  return Taxonomy::from_nodes(std::move(nodes));
}

} // namespace

Taxonomy parse_taxonomy(std::string_view text, TaxonomyFormat format)
{
  if (trim(text).empty())
    throw ValidationError("taxonomy: no nodes");
  return format == TaxonomyFormat::JsonTree ? parse_json_tree(text) : parse_edge_list(text);
}

Taxonomy parse_taxonomy(std::string_view text)
{
  const auto body = trim(text);
  const bool json = !body.empty() && body.front() == '{';
  return parse_taxonomy(text, json ? TaxonomyFormat::JsonTree : TaxonomyFormat::EdgeList);
}

Taxonomy load_taxonomy(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open taxonomy '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_taxonomy(buf.str());
}

FiniteMetric cost_matrix(const Taxonomy& tax, NodeSelection selection)
{
  std::vector<int> ids;
  if (selection == NodeSelection::LeavesOnly) {
    ids = tax.leaves();
    if (ids.size() < 2)
      throw ValidationError("cost matrix: need at least 2 leaves, taxonomy has " +
                            std::to_string(ids.size()));
  } else {
    ids.resize(tax.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
      ids[i] = static_cast<int>(i);
  }

  const auto n = static_cast<Eigen::Index>(ids.size());
  FiniteMetric metric;
  metric.node_ids = ids;
  for (int id : ids)
    metric.names.push_back(tax.node(id).name);
  metric.costs = Eigen::MatrixXd::Zero(n, n);

  // Path length via the lowest common ancestor: climb from u recording the
  // distance to each ancestor, then climb from v until an ancestor is hit.
  std::vector<double> up(tax.size(), -1.0);
  for (Eigen::Index a = 0; a < n; ++a) {
    std::fill(up.begin(), up.end(), -1.0);
    double acc = 0.0;
    for (int cur = ids[a];; ) {
      up[cur] = acc;
      const auto& node = tax.node(cur);
      if (!node.parent)
        break;
      acc += node.weight;
      cur = *node.parent;
    }
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double down = 0.0;
      int cur = ids[b];
      while (up[cur] < 0.0) {
        down += tax.node(cur).weight;
        cur = *tax.node(cur).parent;
      }
      const double d = up[cur] + down;
      metric.costs(a, b) = d;
      metric.costs(b, a) = d;
    }
  }
  return metric;
}

std::string to_string(MetricViolation::Kind kind)
{
  switch (kind) {
  case MetricViolation::Kind::NonZeroDiagonal: return "non-zero-diagonal";
  case MetricViolation::Kind::Asymmetry: return "asymmetry";
  case MetricViolation::Kind::NonPositive: return "non-positive";
  case MetricViolation::Kind::Triangle: return "triangle";
  case MetricViolation::Kind::NonFinite: return "non-finite";
  }
  return "unknown";
}

std::vector<MetricViolation> validate_metric(const Eigen::MatrixXd& D)
{
  if (D.rows() != D.cols())
    throw ValidationError("validate_metric: matrix is " + std::to_string(D.rows()) + "x" +
                          std::to_string(D.cols()) + ", expected square");
  using Kind = MetricViolation::Kind;
  std::vector<MetricViolation> out;
  const int n = static_cast<int>(D.rows());
  if (!D.allFinite()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!std::isfinite(D(i, j)))
          out.push_back({Kind::NonFinite, i, j});
    return out;
  }
  const double tol = 1e-12 * std::max(1.0, D.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i)
    if (D(i, i) != 0.0)
      out.push_back({Kind::NonZeroDiagonal, i, i});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (D(i, j) != D(j, i))
        out.push_back({Kind::Asymmetry, i, j});
      if (D(i, j) <= 0.0 || D(j, i) <= 0.0)
        out.push_back({Kind::NonPositive, i, j});
    }
  // One report per (endpoints, intermediate) with i < k.
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        if (j == i || j == k)
          continue;
        if (D(i, j) + D(j, k) < D(i, k) - tol)
          out.push_back({Kind::Triangle, i, j, k});
      }
  return out;
}

std::string cost_matrix_csv(const FiniteMetric& metric)
{
  std::string out;
  for (const auto& name : metric.names)
    out += "," + csv::escape_field(name);
  out += "\n";
  for (std::size_t r = 0; r < metric.size(); ++r) {
    out += csv::escape_field(metric.names[r]);
    for (std::size_t c = 0; c < metric.size(); ++c)
      out += "," + csv::format_number(metric.costs(static_cast<Eigen::Index>(r),
                                                   static_cast<Eigen::Index>(c)));
    out += "\n";
  }
  return out;
}

FiniteMetric uniform_metric(std::vector<std::string> names)
{
  const auto n = static_cast<Eigen::Index>(names.size());
  FiniteMetric metric;
  metric.names = std::move(names);
  metric.costs = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
  return metric;
}

} // namespace mgproto
