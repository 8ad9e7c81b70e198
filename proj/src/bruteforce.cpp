#include "hier/bruteforce.hpp"

#include <algorithm>
#include <stdexcept>

namespace hier {

namespace {

void check_size(std::size_t n, std::size_t limit) {
  if (n < 2 || n > limit) {
    throw std::invalid_argument("element count must be in [2, " + std::to_string(limit) + "]");
  }
}

void attach_rest(const BinaryHierarchy& h, std::span<const ElementId> rest,
                 const std::function<void(const BinaryHierarchy&)>& fn) {
  if (rest.empty()) {
    fn(h);
    return;
  }
  for (NodeId v = 0; v < h.node_count(); ++v) {
    BinaryHierarchy next = h;
    next.insert_sibling(v, rest.front());
    attach_rest(next, rest.subspan(1), fn);
  }
}

}  // namespace

std::uint64_t topology_count(std::size_t n) {
  std::uint64_t count = 1;
  for (std::size_t k = 3; k <= n; ++k) count *= 2 * k - 3;
  return count;
}

void for_each_topology(std::span<const ElementId> labels, const std::function<void(const BinaryHierarchy&)>& fn) {
  check_size(labels.size(), kMaxEnumerate);
  attach_rest(BinaryHierarchy::pair(labels[0], labels[1]), labels.subspan(2), fn);
}

std::vector<BinaryHierarchy> enumerate(std::span<const ElementId> labels) {
  std::vector<BinaryHierarchy> out;
  for_each_topology(labels, [&](const BinaryHierarchy& h) { out.push_back(h); });
  return out;
}

std::vector<BinaryHierarchy> enumerate(std::size_t n) {
  check_size(n, kMaxEnumerate);
  const auto labels = default_labels(n);
  return enumerate(labels);
}

std::vector<Triplet> all_triplets(std::span<const ElementId> elements) {
  std::vector<ElementId> sorted(elements.begin(), elements.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Triplet> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      for (std::size_t k = j + 1; k < sorted.size(); ++k) out.emplace_back(sorted[i], sorted[j], sorted[k]);
    }
  }
  return out;
}

AnswerTable answer_table(const BinaryHierarchy& h) {
  const LcaIndex index(h);
  AnswerTable table;
  for (const auto& t : all_triplets(h.elements())) table.emplace(t.sorted(), index.answer(t));
  return table;
}

std::vector<BinaryHierarchy> consistent_with(const AnswerTable& table, std::span<const ElementId> elements) {
  check_size(elements.size(), kMaxExhaustive);
  const auto triplets = all_triplets(elements);
  for (const auto& t : triplets) {
    if (!table.contains(t.sorted())) throw std::invalid_argument("answer table is incomplete");
  }
  std::vector<BinaryHierarchy> out;
  for_each_topology(elements, [&](const BinaryHierarchy& h) {
    const LcaIndex index(h);
    for (const auto& t : triplets) {
      if (!(index.answer(t) == table.at(t.sorted()))) return;
    }
    out.push_back(h);
  });
  return out;
}

BinaryHierarchy reconstruct_exhaustive(OrdinalOracle& o, std::span<const ElementId> elements) {
  check_size(elements.size(), kMaxExhaustive);
  AnswerTable table;
  for (const auto& t : all_triplets(elements)) table.emplace(t.sorted(), o.answer(t));
  auto found = consistent_with(table, elements);
  if (found.size() != 1) {
    throw std::runtime_error(std::to_string(found.size()) + " topologies agree with the answers");
  }
  return std::move(found.front());
}

}  // namespace hier
