#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "acsim/graph.hpp"

namespace acsim {

// Graph document:
//   {"attack_steps":[{"id":str,"logic":"and"|"or","ttc":number,"flag":bool,"entry":bool}],
//    "defense_steps":[{"id":str}],
//    "edges":[[parent_id, child_id]]}
//
// load_graph throws ParseError (with the offending field path) on schema
// problems and ValidationError when the parsed graph breaks an invariant.
AttackGraph load_graph(std::string_view text);
AttackGraph load_graph_file(const std::filesystem::path& path);

// Canonical form: fixed key order, two-space indent, trailing newline.
std::string save_graph(const AttackGraph& graph);
void save_graph_file(const AttackGraph& graph, const std::filesystem::path& path);

}  // namespace acsim
