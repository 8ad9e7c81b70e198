#pragma once

// Exhaustive enumeration of small hierarchies and reconstruction from the
// complete triplet table.

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "hier/hierarchy.hpp"
#include "hier/oracles.hpp"

namespace hier {

inline constexpr std::size_t kMaxEnumerate = 8;
inline constexpr std::size_t kMaxExhaustive = 7;

// (2n-3)!!, with 1 for n <= 2.
std::uint64_t topology_count(std::size_t n);

// Calls fn once per topology over the labels, built by sequential attachment.
// Requires 2 <= |labels| <= kMaxEnumerate.
void for_each_topology(std::span<const ElementId> labels, const std::function<void(const BinaryHierarchy&)>& fn);
std::vector<BinaryHierarchy> enumerate(std::span<const ElementId> labels);
// Over x1..xn.
std::vector<BinaryHierarchy> enumerate(std::size_t n);

// Sorted triplet -> answer.
using AnswerTable = std::map<std::array<ElementId, 3>, TripletAnswer>;

// Every triplet of the elements, each in sorted member order, lexicographic.
std::vector<Triplet> all_triplets(std::span<const ElementId> elements);
AnswerTable answer_table(const BinaryHierarchy& h);

// Topologies agreeing with every entry. Throws if the table misses a triplet.
std::vector<BinaryHierarchy> consistent_with(const AnswerTable& table, std::span<const ElementId> elements);

// Asks all C(n,3) triplets and returns the unique consistent topology.
// Throws std::runtime_error when none (or several) agree.
BinaryHierarchy reconstruct_exhaustive(OrdinalOracle& o, std::span<const ElementId> elements);

}  // namespace hier
