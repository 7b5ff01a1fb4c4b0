#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridstream/blockstore.hpp"
#include "gridstream/digest.hpp"
#include "gridstream/grid.hpp"
#include "gridstream/summaries.hpp"

namespace gridstream {

// What a dataset holds: raw tensors, aggregation state, or finalized fields.
enum class ElementKind { kGridTensor, kSummary, kField };
std::string_view to_string(ElementKind kind) noexcept;

using Element = std::variant<GridTensor, CellSummaries, GridField>;
using Payload = std::vector<Element>;

ElementKind kind_of(const Element& e) noexcept;
std::size_t byte_size(const Element& e) noexcept;
bool bit_identical(const Element& a, const Element& b) noexcept;
bool bit_identical(const Payload& a, const Payload& b) noexcept;

// Lifts a single-variable tensor or a field into a summary; summaries pass
// through. Throws TypeError for multi-variable tensors.
CellSummaries to_summary(const Element& e);

// Operators are referenced by registry name plus an optional argument, so
// plans stay content-addressable and replayable.
struct OperatorRef {
  std::string name;
  std::string arg;

  static OperatorRef parse(std::string_view text);  // "name" or "name:arg"
  std::string str() const;
  bool operator==(const OperatorRef&) const = default;
};

struct MapOperator {
  std::set<ElementKind> accepts;
  // Output kind for a given input kind.
  std::function<ElementKind(ElementKind)> output_kind;
  std::function<Element(const Element&, std::string_view arg)> apply;
};

struct Predicate {
  std::function<bool(const Element&, std::string_view arg)> test;
};

struct CombineOperator {
  enum class Order {
    kTree,      // static balanced binary tree over partition indices
    kLeftFold,  // strictly left to right in partition order
  };
  std::string name;  // set on registration; keys the invocation counter
  ElementKind output = ElementKind::kSummary;
  Order order = Order::kTree;
  // Declared identity, returned by an action reducing an empty dataset.
  std::function<Element()> identity;
  // Normalizes one input element (called on the first element of a fold).
  std::function<Element(const Element&)> lift;
  // Must be associative and commutative for tree order.
  std::function<Element(const Element&, const Element&)> combine;
};

// Process-wide table of named operators with invocation counters. The
// built-ins are registered on first use:
//   map:      identity, select:<var>, lift-moments, variance
//   filter:   always-true, has-variable:<var>
//   combine:  merge, pairwise-mean
class OperatorRegistry {
 public:
  static OperatorRegistry& global();

  void register_map(const std::string& name, MapOperator op);
  void register_predicate(const std::string& name, Predicate op);
  void register_combine(const std::string& name, CombineOperator op);

  // Throw UnknownOperatorError.
  const MapOperator& map(const std::string& name) const;
  const Predicate& predicate(const std::string& name) const;
  const CombineOperator& combine(const std::string& name) const;

  bool has_map(const std::string& name) const;
  bool has_predicate(const std::string& name) const;
  bool has_combine(const std::string& name) const;

  // Invocation counters keyed by operator name ("axis-reduce" and
  // "finalize" count the built-in plan steps).
  void count(const std::string& name, std::uint64_t n = 1) const;
  std::uint64_t invocations(const std::string& name) const;
  std::uint64_t total_invocations() const;

 private:
  OperatorRegistry();

  mutable std::shared_mutex mu_;
  std::map<std::string, std::unique_ptr<MapOperator>> maps_;
  std::map<std::string, std::unique_ptr<Predicate>> predicates_;
  std::map<std::string, std::unique_ptr<CombineOperator>> combines_;
  mutable std::map<std::string, std::unique_ptr<std::atomic<std::uint64_t>>> counters_;
};

enum class PlanOp { kSource, kMap, kFilter, kUnion, kAxisReduce, kCombine, kFinalize };
std::string_view to_string(PlanOp op) noexcept;

class PlanNode;
using PlanNodePtr = std::shared_ptr<const PlanNode>;

// One logical step of a lineage DAG. Identity is content-addressed: the
// same operation over the same parents always hashes to the same id.
class PlanNode {
 public:
  static PlanNodePtr source(std::vector<BlockId> blocks);
  // The factories below validate operator names and element kinds against
  // the registry; they never execute anything.
  static PlanNodePtr map(PlanNodePtr parent, OperatorRef op);
  static PlanNodePtr filter(PlanNodePtr parent, OperatorRef predicate);
  static PlanNodePtr union_of(std::vector<PlanNodePtr> parents);
  static PlanNodePtr axis_reduce(PlanNodePtr parent, Axis axis);
  static PlanNodePtr combine(PlanNodePtr parent, std::string combine_op);
  static PlanNodePtr finalize(PlanNodePtr parent, StatKind stat);

  PlanOp op() const noexcept { return op_; }
  const OperatorRef& operator_ref() const noexcept { return ref_; }
  const std::vector<PlanNodePtr>& parents() const noexcept { return parents_; }
  const std::vector<BlockId>& blocks() const noexcept { return blocks_; }
  ElementKind output_kind() const noexcept { return kind_; }
  std::size_t partitions() const noexcept { return partitions_; }
  const Sha256& id() const noexcept { return id_; }
  std::string short_id() const;
  std::string describe() const;

 private:
  PlanNode() = default;
  void seal();

  PlanOp op_ = PlanOp::kSource;
  OperatorRef ref_;
  std::vector<PlanNodePtr> parents_;
  std::vector<BlockId> blocks_;
  ElementKind kind_ = ElementKind::kGridTensor;
  std::size_t partitions_ = 0;
  Sha256 id_{};
};

// Number of nodes on the longest SOURCE-to-node path.
std::size_t dag_length(const PlanNode& node);

// Source blocks feeding one partition of `node`.
std::vector<BlockId> partition_sources(const PlanNode& node, std::size_t partition);

struct EvalStats {
  std::uint64_t invocations = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t elements_dropped = 0;

  EvalStats& operator+=(const EvalStats& o) {
    invocations += o.invocations;
    bytes_read += o.bytes_read;
    elements_dropped += o.elements_dropped;
    return *this;
  }
};

// Pre-folded per-partition inputs of one COMBINE node, indexed by the
// parent's partition.
using CombineInputs = std::vector<std::optional<Element>>;

struct EvalContext {
  const BlockStore* store = nullptr;
  std::optional<NodeId> node;  // read locality
  const OperatorRegistry* registry = &OperatorRegistry::global();
  // Supplies inputs for COMBINE nodes; when empty, they are recomputed
  // from lineage.
  std::function<const CombineInputs&(const PlanNode& combine)> combine_inputs;
  EvalStats stats;
};

// Computes one partition of `node` by replaying its narrow lineage.
Payload evaluate_partition(const PlanNode& node, std::size_t partition, EvalContext& ctx);

// Folds one partition's elements with the COMBINE operator; empty input
// gives nullopt.
std::optional<Element> fold_partition(const CombineOperator& op, const Payload& payload,
                                      EvalStats& stats);

// Combines per-partition partials in the operator's fixed order, skipping
// empties. Returns nullopt when every partial is empty.
std::optional<Element> reduce_partials(const CombineOperator& op, const CombineInputs& partials,
                                       EvalStats& stats);

}  // namespace gridstream
