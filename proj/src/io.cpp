#include "hier/io.hpp"

#include <algorithm>
#include <cctype>

namespace hier {

namespace {

bool is_label_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

[[noreturn]] void parse_error(std::string_view what, std::size_t pos) {
  throw HierarchyError("newick: " + std::string(what) + " at offset " + std::to_string(pos));
}

}  // namespace

bool is_newick_label(std::string_view label) {
  return !label.empty() && std::all_of(label.begin(), label.end(), is_label_char);
}

std::string to_newick(const BinaryHierarchy& h) {
  if (h.empty()) throw HierarchyError("cannot serialise an empty hierarchy");
  std::vector<std::string> text(h.node_count());
  for (NodeId v : h.postorder()) {
    if (h.is_leaf(v)) {
      if (!is_newick_label(h.label(v))) throw HierarchyError("label not valid in newick: " + h.label(v));
      text[v] = h.label(v);
      continue;
    }
    std::string& a = text[h.left(v)];
    std::string& b = text[h.right(v)];
    text[v].reserve(a.size() + b.size() + 3);
    text[v] += '(';
    text[v] += a;
    text[v] += ',';
    text[v] += b;
    text[v] += ')';
    a.clear();
    b.clear();
  }
  return text[h.root()] + ';';
}

BinaryHierarchy from_newick(std::string_view text) {
  BinaryHierarchy h;
  struct Frame {
    std::vector<NodeId> children;
    bool comma = false;
  };
  std::vector<Frame> open;  // one per unclosed '('
  NodeId finished = kNoNode;
  std::size_t i = 0;

  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto attach = [&](NodeId v, std::size_t pos) {
    if (open.empty()) {
      if (finished != kNoNode) parse_error("unexpected subtree", pos);
      finished = v;
    } else {
      Frame& f = open.back();
      if (!f.children.empty() && !(f.children.size() == 1 && f.comma)) parse_error("expected ','", pos);
      f.children.push_back(v);
    }
  };

  while (true) {
    skip_ws();
    if (i >= text.size()) parse_error("missing ';'", i);
    const char c = text[i];
    if (c == ';') {
      if (!open.empty() || finished == kNoNode) parse_error("unexpected ';'", i);
      ++i;
      break;
    }
    if (finished != kNoNode) parse_error("expected ';'", i);
    if (c == '(') {
      open.emplace_back();
      ++i;
    } else if (c == ',') {
      if (open.empty() || open.back().children.size() != 1 || open.back().comma) {
        parse_error("unexpected ','", i);
      }
      open.back().comma = true;
      ++i;
    } else if (c == ')') {
      if (open.empty()) parse_error("unbalanced ')'", i);
      if (open.back().children.size() != 2) {
        parse_error("internal node must have exactly two children", i);
      }
      const NodeId v = h.add_internal(open.back().children[0], open.back().children[1]);
      open.pop_back();
      const std::size_t pos = i++;
      if (i < text.size() && (is_label_char(text[i]) || text[i] == ':')) {
        parse_error("internal labels and branch lengths are not supported", i);
      }
      attach(v, pos);
    } else if (is_label_char(c)) {
      const std::size_t start = i;
      while (i < text.size() && is_label_char(text[i])) ++i;
      if (i < text.size() && text[i] == ':') parse_error("branch lengths are not supported", i);
      attach(h.add_leaf(std::string(text.substr(start, i - start))), start);
    } else {
      parse_error(std::string("unexpected character '") + c + "'", i);
    }
  }
  skip_ws();
  if (i != text.size()) parse_error("trailing characters", i);
  h.set_root(finished);
  h.validate();
  return h;
}

nlohmann::json to_json_tree(const BinaryHierarchy& h) {
  if (h.empty()) return nullptr;
  std::vector<nlohmann::json> out(h.node_count());
  for (NodeId v : h.postorder()) {
    nlohmann::json j;
    j["id"] = v;
    if (h.is_leaf(v)) {
      j["label"] = h.label(v);
      j["children"] = nlohmann::json::array();
    } else {
      j["label"] = nullptr;
      j["children"] = nlohmann::json::array({std::move(out[h.left(v)]), std::move(out[h.right(v)])});
    }
    out[v] = std::move(j);
  }
  return std::move(out[h.root()]);
}

nlohmann::json to_state_json(const BinaryHierarchy& h) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId v = 0; v < h.node_count(); ++v) {
    if (h.is_leaf(v)) {
      nodes.push_back({{"label", h.label(v)}});
    } else {
      nodes.push_back({{"children", {h.left(v), h.right(v)}}});
    }
  }
  nlohmann::json j;
  j["nodes"] = std::move(nodes);
  j["root"] = h.empty() ? nlohmann::json(nullptr) : nlohmann::json(h.root());
  return j;
}

BinaryHierarchy from_state_json(const nlohmann::json& j) {
  if (j.at("root").is_null()) {
    if (!j.at("nodes").empty()) throw HierarchyError("state: nodes without a root");
    return {};
  }
  std::vector<BinaryHierarchy::TableRow> rows;
  for (const auto& n : j.at("nodes")) {
    BinaryHierarchy::TableRow row;
    if (n.contains("label")) {
      row.label = n.at("label").get<std::string>();
    } else {
      const auto& c = n.at("children");
      if (c.size() != 2) throw HierarchyError("state: internal node needs two children");
      row.children = {c[0].get<NodeId>(), c[1].get<NodeId>()};
    }
    rows.push_back(std::move(row));
  }
  return BinaryHierarchy::from_table(rows, j.at("root").get<NodeId>());
}

}  // namespace hier
