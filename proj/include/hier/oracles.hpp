#pragma once

// Answer sources for triplet queries and the pivot-query interpretation.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "hier/hierarchy.hpp"
#include "hier/rng.hpp"

namespace hier {

enum class PivotDirection { Left, Right, Outside };

const char* to_string(PivotDirection d);

// Query counts per phase tag. total() is always the sum over phases.
class QueryLog {
 public:
  void record(const std::string& phase, std::uint64_t count = 1);
  std::uint64_t count(const std::string& phase) const;
  std::uint64_t total() const;
  const std::map<std::string, std::uint64_t>& phases() const { return phases_; }
  // "phase,queries" header plus one row per phase, sorted by tag.
  std::string to_csv() const;

 private:
  std::map<std::string, std::uint64_t> phases_;
};

class OrdinalOracle {
 public:
  virtual ~OrdinalOracle() = default;

  TripletAnswer answer(const Triplet& t);
  std::uint64_t queries_used() const { return used_; }

 protected:
  virtual TripletAnswer respond(const Triplet& t) = 0;

 private:
  std::uint64_t used_ = 0;
};

// Deterministic ground truth.
class ExactOracle final : public OrdinalOracle {
 public:
  explicit ExactOracle(BinaryHierarchy truth);

  const BinaryHierarchy& truth() const { return *truth_; }

 protected:
  TripletAnswer respond(const Triplet& t) override;

 private:
  std::unique_ptr<BinaryHierarchy> truth_;  // stable address for index_
  LcaIndex index_;
};

enum class Adversary { UniformWrong, FixedWrong, Callback };

// Which wrong pair a FixedWrong adversary returns, by lexicographic order of
// the two wrong pairs.
enum class FixedWrongRule { SmallestPair, LargestPair };

using AdversaryCallback =
    std::function<TripletAnswer(const Triplet& t, const TripletAnswer& truth, Rng& rng)>;

struct NoiseModel {
  double p = 1.0;
  Adversary adversary = Adversary::UniformWrong;
  FixedWrongRule rule = FixedWrongRule::SmallestPair;
  AdversaryCallback callback;

  static NoiseModel uniform(double p);
  static NoiseModel fixed(double p, FixedWrongRule rule = FixedWrongRule::SmallestPair);
  static NoiseModel custom(double p, AdversaryCallback cb);

  // Throws std::invalid_argument unless 0.5 < p <= 1 (and a callback is set when needed).
  void validate() const;
};

// "uniform", "fixed", "fixed-largest".
NoiseModel parse_noise_model(const std::string& adversary, double p);

// Each call is independently correct with probability p; otherwise the
// adversary picks the answer. Repeated queries are re-randomised.
class NoisyOracle final : public OrdinalOracle {
 public:
  NoisyOracle(BinaryHierarchy truth, NoiseModel model, std::uint64_t seed);

  const BinaryHierarchy& truth() const { return *truth_; }
  const NoiseModel& model() const { return model_; }

 protected:
  TripletAnswer respond(const Triplet& t) override;

 private:
  std::unique_ptr<BinaryHierarchy> truth_;
  LcaIndex index_;
  NoiseModel model_;
  Rng rng_;
};

// Delegates to `inner` and attributes every call to `phase` in `log`.
class CountingOracle final : public OrdinalOracle {
 public:
  CountingOracle(OrdinalOracle& inner, QueryLog& log, std::string phase);

 protected:
  TripletAnswer respond(const Triplet& t) override;

 private:
  OrdinalOracle* inner_;
  QueryLog* log_;
  std::string phase_;
};

// Answers from an arbitrary function (scripted or human-backed sources).
class FunctionOracle final : public OrdinalOracle {
 public:
  explicit FunctionOracle(std::function<TripletAnswer(const Triplet&)> fn) : fn_(std::move(fn)) {}

 protected:
  TripletAnswer respond(const Triplet& t) override { return fn_(t); }

 private:
  std::function<TripletAnswer(const Triplet&)> fn_;
};

// {x_L, x_R, x} with x_L, x_R the cached representatives of v's children.
Triplet pivot_triplet(const BinaryHierarchy& h, NodeId v, const ElementId& x);
// {x_L,x} -> Left, {x_R,x} -> Right, {x_L,x_R} -> Outside.
PivotDirection interpret_pivot(const BinaryHierarchy& h, NodeId v, const ElementId& x,
                               const TripletAnswer& a);
// One ordinal query with pivot v. Throws if v is a leaf or x is already in h.
PivotDirection pivot_query(OrdinalOracle& o, const BinaryHierarchy& h, NodeId v, const ElementId& x);

// The node of `partial` that x must become the sibling of, computed from the
// truth directly (no queries). x must be in truth and not in partial.
NodeId true_sibling(const BinaryHierarchy& truth, const BinaryHierarchy& partial, const ElementId& x);

}  // namespace hier
