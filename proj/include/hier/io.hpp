#pragma once

// Newick and JSON forms of a hierarchy.

#include <string>
#include <string_view>

#include "hier/hierarchy.hpp"
#include "json.hpp"

namespace hier {

// Labels allowed in Newick text: [A-Za-z0-9_.-]+
bool is_newick_label(std::string_view label);

// "(a,(b,c));" with children in stored order. Throws HierarchyError on a
// label outside the Newick alphabet.
std::string to_newick(const BinaryHierarchy& h);
// Strict binary Newick: unlabelled internal nodes, no branch lengths.
BinaryHierarchy from_newick(std::string_view text);

// Nested {"id", "label", "children"} objects for display.
nlohmann::json to_json_tree(const BinaryHierarchy& h);

// Exact node table (ids preserved) for persistence.
nlohmann::json to_state_json(const BinaryHierarchy& h);
BinaryHierarchy from_state_json(const nlohmann::json& j);

}  // namespace hier
