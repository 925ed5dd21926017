#include <fstream>
#include <sstream>

#include <json.hpp>

#include "io_util.hpp"
#include "qpcert/errors.hpp"
#include "qpcert/graph.hpp"

namespace qpcert {

namespace {

std::vector<int> mask_to_indices(const std::vector<std::uint8_t>& mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

// The file layout is written by hand so reals always carry 17 significant
// digits: {"n":..,"d":..,"edges":[[i,j],..],"features":[[..]],"labels":[..],
// "labeled":[..],"verified":[..]}.
void save_graph(const Graph& g, const std::string& path) {
  g.validate();
  std::ostringstream os;
  os << "{\n";
  os << "  \"n\": " << g.n << ",\n";
  os << "  \"d\": " << g.d << ",\n";
  os << "  \"edges\": [";
  bool first = true;
  for (int i = 0; i < g.n; ++i) {
    for (int j = i + 1; j < g.n; ++j) {
      if (g.adjacency(i, j) != 0.0) {
        if (!first) os << ", ";
        os << "[" << i << ", " << j << "]";
        first = false;
      }
    }
  }
  os << "],\n";
  os << "  \"features\": [\n";
  for (int i = 0; i < g.n; ++i) {
    os << "    [";
    for (int k = 0; k < g.d; ++k) {
      if (k) os << ", ";
      os << format_real(g.features(i, k));
    }
    os << "]" << (i + 1 < g.n ? "," : "") << "\n";
  }
  os << "  ],\n";
  os << "  \"labels\": [";
  for (int i = 0; i < g.n; ++i) os << (i ? ", " : "") << g.labels[i];
  os << "],\n";
  const auto labeled = mask_to_indices(g.labeled_mask);
  os << "  \"labeled\": [";
  for (std::size_t i = 0; i < labeled.size(); ++i)
    os << (i ? ", " : "") << labeled[i];
  os << "],\n";
  const auto verified = mask_to_indices(g.verified_mask);
  os << "  \"verified\": [";
  for (std::size_t i = 0; i < verified.size(); ++i)
    os << (i ? ", " : "") << verified[i];
  os << "]\n";
  os << "}\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  f << os.str();
  if (!f) fail(ErrorCode::io_error, "write failed: " + path);
}

Graph load_graph(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io_error, "malformed graph file " + path + ": " + e.what());
  }
  Graph g;
  try {
    g.n = j.at("n").get<int>();
    g.d = j.at("d").get<int>();
    const auto& feats = j.at("features");
    if (static_cast<int>(feats.size()) != g.n)
      fail(ErrorCode::dimension_mismatch,
           "features row count != n in " + path);
    g.features.resize(g.n, g.d);
    for (int i = 0; i < g.n; ++i) {
      const auto& row = feats.at(i);
      if (static_cast<int>(row.size()) != g.d)
        fail(ErrorCode::dimension_mismatch,
             "feature row " + std::to_string(i) + " has wrong length");
      for (int k = 0; k < g.d; ++k) g.features(i, k) = row.at(k).get<double>();
    }
    const auto& labels = j.at("labels");
    if (static_cast<int>(labels.size()) != g.n)
      fail(ErrorCode::dimension_mismatch, "labels length != n in " + path);
    g.labels.resize(g.n);
    for (int i = 0; i < g.n; ++i) g.labels[i] = labels.at(i).get<int>();

    g.adjacency = Eigen::MatrixXd::Zero(g.n, g.n);
    for (const auto& e : j.at("edges")) {
      const int a = e.at(0).get<int>();
      const int b = e.at(1).get<int>();
      if (a < 0 || b < 0 || a >= g.n || b >= g.n || a == b)
        fail(ErrorCode::invalid_parameter, "edge endpoint out of range");
      g.adjacency(a, b) = 1.0;
      g.adjacency(b, a) = 1.0;
    }
    g.labeled_mask.assign(g.n, 0);
    g.verified_mask.assign(g.n, 0);
    g.test_mask.assign(g.n, 0);
    for (const auto& idx : j.at("labeled")) {
      const int i = idx.get<int>();
      if (i < 0 || i >= g.n)
        fail(ErrorCode::invalid_parameter, "labeled index out of range");
      g.labeled_mask[i] = 1;
    }
    if (j.contains("verified")) {
      for (const auto& idx : j.at("verified")) {
        const int i = idx.get<int>();
        if (i < 0 || i >= g.n)
          fail(ErrorCode::invalid_parameter, "verified index out of range");
        g.verified_mask[i] = 1;
      }
    }
    for (int i = 0; i < g.n; ++i) g.test_mask[i] = !g.labeled_mask[i];
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io_error, "malformed graph file " + path + ": " + e.what());
  }

  // Imported graphs may list labeled nodes anywhere; reorder them to the
  // index prefix. Files written by save_graph are already canonical, so the
  // round trip is the identity.
  const int m = g.num_labeled();
  bool prefix = true;
  for (int i = 0; i < m; ++i) prefix = prefix && g.labeled_mask[i];
  if (!prefix) {
    std::vector<int> order;
    for (int i = 0; i < g.n; ++i)
      if (g.labeled_mask[i]) order.push_back(i);
    for (int i = 0; i < g.n; ++i)
      if (!g.labeled_mask[i]) order.push_back(i);
    Graph c;
    c.n = g.n;
    c.d = g.d;
    c.adjacency.resize(g.n, g.n);
    c.features.resize(g.n, g.d);
    c.labels.resize(g.n);
    c.labeled_mask.assign(g.n, 0);
    c.verified_mask.assign(g.n, 0);
    c.test_mask.assign(g.n, 0);
    for (int i = 0; i < g.n; ++i) {
      c.features.row(i) = g.features.row(order[i]);
      c.labels[i] = g.labels[order[i]];
      c.labeled_mask[i] = g.labeled_mask[order[i]];
      c.verified_mask[i] = g.verified_mask[order[i]];
      c.test_mask[i] = g.test_mask[order[i]];
      for (int j = 0; j < g.n; ++j)
        c.adjacency(i, j) = g.adjacency(order[i], order[j]);
    }
    g = std::move(c);
  }
  g.validate();
  return g;
}

}  // namespace qpcert
