#include "acsim/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "acsim/errors.hpp"

namespace acsim {

namespace {

using nlohmann::ordered_json;

const ordered_json& require(const ordered_json& obj, const char* key,
                            const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "." + key + ": missing field");
  return *it;
}

std::string require_string(const ordered_json& obj, const char* key,
                           const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool optional_bool(const ordered_json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean()) throw ParseError(where + "." + key + ": expected a boolean");
  return it->get<bool>();
}

const ordered_json& require_array(const ordered_json& doc, const char* key) {
  const auto& v = require(doc, key, "graph");
  if (!v.is_array()) throw ParseError(std::string("graph.") + key + ": expected an array");
  return v;
}

}  // namespace

AttackGraph load_graph(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("graph: malformed JSON: ") + e.what());
  }

  std::vector<AttackStep> attack;
  const auto& attack_json = require_array(doc, "attack_steps");
  for (std::size_t i = 0; i < attack_json.size(); ++i) {
    const std::string where = "attack_steps[" + std::to_string(i) + "]";
    const auto& node = attack_json[i];
    AttackStep step;
    step.id = require_string(node, "id", where);
    auto logic = require_string(node, "logic", where);
    if (logic == "or") {
      step.logic = StepLogic::kOr;
    } else if (logic == "and") {
      step.logic = StepLogic::kAnd;
    } else {
      throw ParseError(where + ".logic: unknown value \"" + logic +
                       "\" (expected \"and\" or \"or\")");
    }
    auto it = node.find("ttc");
    if (it != node.end()) {
      if (!it->is_number()) throw ParseError(where + ".ttc: expected a number");
      step.ttc_mean = it->get<double>();
    }
    step.is_flag = optional_bool(node, "flag", where);
    step.is_entry = optional_bool(node, "entry", where);
    attack.push_back(std::move(step));
  }

  std::vector<DefenseStep> defense;
  if (doc.contains("defense_steps")) {
    const auto& defense_json = require_array(doc, "defense_steps");
    for (std::size_t i = 0; i < defense_json.size(); ++i) {
      const std::string where = "defense_steps[" + std::to_string(i) + "]";
      defense.push_back(DefenseStep{require_string(defense_json[i], "id", where)});
    }
  }

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const auto& edges_json = require_array(doc, "edges");
    for (std::size_t i = 0; i < edges_json.size(); ++i) {
      const auto& e = edges_json[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw ParseError("edges[" + std::to_string(i) +
                         "]: expected [parent_id, child_id]");
      }
      edges.push_back(Edge{e[0].get<std::string>(), e[1].get<std::string>()});
    }
  }

  AttackGraph graph(std::move(attack), std::move(defense), std::move(edges));
  require_valid(graph);
  return graph;
}

AttackGraph load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open graph file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_graph(buf.str());
}

std::string save_graph(const AttackGraph& graph) {
  ordered_json doc;
  doc["attack_steps"] = ordered_json::array();
  for (const auto& s : graph.attack_steps()) {
    ordered_json node;
    node["id"] = s.id;
    node["logic"] = std::string(to_string(s.logic));
    node["ttc"] = s.ttc_mean;
    node["flag"] = s.is_flag;
    node["entry"] = s.is_entry;
    doc["attack_steps"].push_back(std::move(node));
  }
  doc["defense_steps"] = ordered_json::array();
  for (const auto& d : graph.defense_steps()) {
    doc["defense_steps"].push_back(ordered_json{{"id", d.id}});
  }
  doc["edges"] = ordered_json::array();
  for (const auto& e : graph.edges()) {
    doc["edges"].push_back(ordered_json::array({e.parent, e.child}));
  }
  return doc.dump(2) + "\n";
}

void save_graph_file(const AttackGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write graph file " + path.string());
  out << save_graph(graph);
}

}  // namespace acsim
