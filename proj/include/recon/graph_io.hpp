#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "recon/errors.hpp"
#include "recon/graph.hpp"

namespace recon {

using json = nlohmann::json;

inline json to_json(const Graph& g) {
  json j;
  j["n"] = g.n();
  json edges = json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  if (g.has_attrs()) j["vertex_attrs"] = g.attrs();
  return j;
}

inline Graph graph_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("n") || !j.contains("edges"))
      throw InvalidArgument("graph json: expected object with \"n\" and \"edges\"");
    int n = j.at("n").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw InvalidArgument("graph json: edge must be a pair");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    std::vector<AttrVector> attrs;
    if (j.contains("vertex_attrs") && !j["vertex_attrs"].is_null())
      attrs = j["vertex_attrs"].get<std::vector<AttrVector>>();
    return Graph(n, std::move(edges), std::move(attrs));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("graph json: ") + e.what());
  }
}

/// "n m" header followed by m lines "u v".
inline std::string to_edge_list(const Graph& g) {
  std::ostringstream os;
  os << g.n() << ' ' << g.m() << '\n';
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
  return os.str();
}

inline Graph graph_from_edge_list(std::istream& in) {
  long long n = -1, m = -1;
  if (!(in >> n >> m) || n < 0 || m < 0) throw InvalidArgument("edge list: bad \"n m\" header");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (long long i = 0; i < m; ++i) {
    int u, v;
    if (!(in >> u >> v)) throw InvalidArgument("edge list: expected " + std::to_string(m) + " edges, got " +
                                               std::to_string(i));
    edges.emplace_back(u, v);
  }
  return Graph(static_cast<int>(n), std::move(edges));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Reads a graph file; JSON if the first non-blank character is '{',
/// otherwise the edge-list format.
inline Graph load_graph(const std::string& path) {
  std::string text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return graph_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw InvalidArgument(path + ": " + e.what());
    }
  }
  std::istringstream in(text);
  return graph_from_edge_list(in);
}

/// Files holding several graphs: a JSON array of graph objects, or an object
/// with a "graphs" array.
inline std::vector<Graph> load_graphs(const std::string& path) {
  std::string text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || (text[first] != '[' && text[first] != '{')) return {load_graph(path)};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  std::vector<Graph> out;
  const json& list = j.is_object() && j.contains("graphs") ? j["graphs"] : j;
  if (list.is_array()) {
    for (const auto& g : list) out.push_back(graph_from_json(g));
  } else {
    out.push_back(graph_from_json(list));
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

}  // namespace recon
