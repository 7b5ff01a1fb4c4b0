#include "gridstream/plan.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include "gridstream/errors.hpp"
#include "gridstream/sgf.hpp"

namespace gridstream {

std::string_view to_string(ElementKind kind) noexcept {
  switch (kind) {
    case ElementKind::kGridTensor:
      return "grid-tensor";
    case ElementKind::kSummary:
      return "summary";
    case ElementKind::kField:
      return "field";
  }
  return "?";
}

std::string_view to_string(PlanOp op) noexcept {
  switch (op) {
    case PlanOp::kSource:
      return "SOURCE";
    case PlanOp::kMap:
      return "MAP";
    case PlanOp::kFilter:
      return "FILTER";
    case PlanOp::kUnion:
      return "UNION";
    case PlanOp::kAxisReduce:
      return "AXIS_REDUCE";
    case PlanOp::kCombine:
      return "COMBINE";
    case PlanOp::kFinalize:
      return "FINALIZE";
  }
  return "?";
}

ElementKind kind_of(const Element& e) noexcept {
  return static_cast<ElementKind>(e.index());
}

std::size_t byte_size(const Element& e) noexcept {
  return std::visit([](const auto& v) { return v.byte_size(); }, e);
}

bool bit_identical(const Element& a, const Element& b) noexcept {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        return bit_identical(x, std::get<T>(b));
      },
      a);
}

bool bit_identical(const Payload& a, const Payload& b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!bit_identical(a[i], b[i])) return false;
  }
  return true;
}

CellSummaries to_summary(const Element& e) {
  if (const auto* s = std::get_if<CellSummaries>(&e)) return *s;
  if (const auto* f = std::get_if<GridField>(&e)) return accumulate(CellSummaries::identity(), *f);
  const auto& t = std::get<GridTensor>(e);
  if (t.fields().size() != 1) {
    throw TypeError("cannot summarize a tensor with " + std::to_string(t.fields().size()) +
                    " variables; select one first");
  }
  return accumulate(CellSummaries::identity(), t.fields().front());
}

OperatorRef OperatorRef::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return {std::string(text), {}};
  return {std::string(text.substr(0, colon)), std::string(text.substr(colon + 1))};
}

std::string OperatorRef::str() const { return arg.empty() ? name : name + ":" + arg; }

// ---------------------------------------------------------------------------
// Registry

void OperatorRegistry::register_map(const std::string& name, MapOperator op) {
  std::unique_lock lock(mu_);
  maps_[name] = std::make_unique<MapOperator>(std::move(op));
}

void OperatorRegistry::register_predicate(const std::string& name, Predicate op) {
  std::unique_lock lock(mu_);
  predicates_[name] = std::make_unique<Predicate>(std::move(op));
}

void OperatorRegistry::register_combine(const std::string& name, CombineOperator op) {
  op.name = name;
  std::unique_lock lock(mu_);
  combines_[name] = std::make_unique<CombineOperator>(std::move(op));
}

const MapOperator& OperatorRegistry::map(const std::string& name) const {
  std::shared_lock lock(mu_);
  const auto it = maps_.find(name);
  if (it == maps_.end()) throw UnknownOperatorError("no map operator named '" + name + "'");
  return *it->second;
}

const Predicate& OperatorRegistry::predicate(const std::string& name) const {
  std::shared_lock lock(mu_);
  const auto it = predicates_.find(name);
  if (it == predicates_.end()) throw UnknownOperatorError("no predicate named '" + name + "'");
  return *it->second;
}

const CombineOperator& OperatorRegistry::combine(const std::string& name) const {
  std::shared_lock lock(mu_);
  const auto it = combines_.find(name);
  if (it == combines_.end()) throw UnknownOperatorError("no combine operator named '" + name + "'");
  return *it->second;
}

bool OperatorRegistry::has_map(const std::string& name) const {
  std::shared_lock lock(mu_);
  return maps_.contains(name);
}

bool OperatorRegistry::has_predicate(const std::string& name) const {
  std::shared_lock lock(mu_);
  return predicates_.contains(name);
}

bool OperatorRegistry::has_combine(const std::string& name) const {
  std::shared_lock lock(mu_);
  return combines_.contains(name);
}

void OperatorRegistry::count(const std::string& name, std::uint64_t n) const {
  {
    std::shared_lock lock(mu_);
    if (const auto it = counters_.find(name); it != counters_.end()) {
      it->second->fetch_add(n, std::memory_order_relaxed);
      return;
    }
  }
  std::unique_lock lock(mu_);
  auto& slot = counters_[name];
  if (!slot) slot = std::make_unique<std::atomic<std::uint64_t>>(0);
  slot->fetch_add(n, std::memory_order_relaxed);
}

std::uint64_t OperatorRegistry::invocations(const std::string& name) const {
  std::shared_lock lock(mu_);
  const auto it = counters_.find(name);
  return it == counters_.end() ? 0 : it->second->load(std::memory_order_relaxed);
}

std::uint64_t OperatorRegistry::total_invocations() const {
  std::shared_lock lock(mu_);
  std::uint64_t n = 0;
  for (const auto& [name, c] : counters_) n += c->load(std::memory_order_relaxed);
  return n;
}

// ---------------------------------------------------------------------------
// Plan nodes

void PlanNode::seal() {
  Sha256Builder h;
  h.update(to_string(op_));
  h.update(ref_.name);
  h.update(ref_.arg);
  h.update_u64(parents_.size());
  for (const auto& p : parents_) {
    h.update(std::as_bytes(std::span(p->id())));
  }
  h.update_u64(blocks_.size());
  for (const auto& b : blocks_) {
    h.update(std::as_bytes(std::span(b.content)));
    h.update_u64(b.sequence);
  }
  id_ = h.finish();
}

std::string PlanNode::short_id() const { return to_hex(std::span(id_).first(6)); }

std::string PlanNode::describe() const {
  std::string s(to_string(op_));
  if (!ref_.name.empty()) s += "(" + ref_.str() + ")";
  return s;
}

PlanNodePtr PlanNode::source(std::vector<BlockId> blocks) {
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kSource;
  n->partitions_ = blocks.size();
  n->blocks_ = std::move(blocks);
  n->kind_ = ElementKind::kGridTensor;
  n->seal();
  return n;
}

PlanNodePtr PlanNode::map(PlanNodePtr parent, OperatorRef op) {
  const MapOperator& m = OperatorRegistry::global().map(op.name);
  if (!m.accepts.contains(parent->output_kind())) {
    throw TypeError("map operator '" + op.name + "' does not accept " +
                    std::string(to_string(parent->output_kind())) + " elements");
  }
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kMap;
  n->kind_ = m.output_kind(parent->output_kind());
  n->partitions_ = parent->partitions();
  n->ref_ = std::move(op);
  n->parents_ = {std::move(parent)};
  n->seal();
  return n;
}

PlanNodePtr PlanNode::filter(PlanNodePtr parent, OperatorRef predicate) {
  OperatorRegistry::global().predicate(predicate.name);
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kFilter;
  n->kind_ = parent->output_kind();
  n->partitions_ = parent->partitions();
  n->ref_ = std::move(predicate);
  n->parents_ = {std::move(parent)};
  n->seal();
  return n;
}

PlanNodePtr PlanNode::union_of(std::vector<PlanNodePtr> parents) {
  if (parents.empty()) throw TypeError("union needs at least one input");
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kUnion;
  n->kind_ = parents.front()->output_kind();
  for (const auto& p : parents) {
    if (p->output_kind() != n->kind_) {
      throw TypeError("cannot union " + std::string(to_string(p->output_kind())) + " with " +
                      std::string(to_string(n->kind_)) + " datasets");
    }
    n->partitions_ += p->partitions();
  }
  n->parents_ = std::move(parents);
  n->seal();
  return n;
}

PlanNodePtr PlanNode::axis_reduce(PlanNodePtr parent, Axis axis) {
  if (parent->output_kind() == ElementKind::kField) {
    throw TypeError("axis reduction needs tensors or summaries");
  }
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kAxisReduce;
  n->kind_ = ElementKind::kSummary;
  n->partitions_ = parent->partitions();
  n->ref_ = {"axis-reduce", std::string(to_string(axis))};
  n->parents_ = {std::move(parent)};
  n->seal();
  return n;
}

PlanNodePtr PlanNode::combine(PlanNodePtr parent, std::string combine_op) {
  const CombineOperator& c = OperatorRegistry::global().combine(combine_op);
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kCombine;
  n->kind_ = c.output;
  n->partitions_ = 1;
  n->ref_ = {std::move(combine_op), {}};
  n->parents_ = {std::move(parent)};
  n->seal();
  return n;
}

PlanNodePtr PlanNode::finalize(PlanNodePtr parent, StatKind stat) {
  auto n = std::shared_ptr<PlanNode>(new PlanNode());
  n->op_ = PlanOp::kFinalize;
  n->kind_ = ElementKind::kField;
  n->partitions_ = parent->partitions();
  n->ref_ = {"finalize", std::string(to_string(stat))};
  n->parents_ = {std::move(parent)};
  n->seal();
  return n;
}

std::size_t dag_length(const PlanNode& node) {
  std::unordered_map<const PlanNode*, std::size_t> memo;
  std::function<std::size_t(const PlanNode&)> walk = [&](const PlanNode& n) -> std::size_t {
    if (auto it = memo.find(&n); it != memo.end()) return it->second;
    std::size_t longest = 0;
    for (const auto& p : n.parents()) longest = std::max(longest, walk(*p));
    return memo[&n] = longest + 1;
  };
  return walk(node);
}

namespace {

// Maps a union partition onto (parent, local partition).
std::pair<const PlanNode*, std::size_t> locate(const PlanNode& u, std::size_t partition) {
  for (const auto& p : u.parents()) {
    if (partition < p->partitions()) return {p.get(), partition};
    partition -= p->partitions();
  }
  throw TypeError("partition index out of range for union");
}

void check_partition(const PlanNode& node, std::size_t partition) {
  if (partition >= node.partitions()) {
    throw TypeError("partition " + std::to_string(partition) + " out of range for " +
                    node.describe() + " with " + std::to_string(node.partitions()) + " partitions");
  }
}

Element apply_finalize(const Element& e, StatKind stat) {
  if (const auto* f = std::get_if<GridField>(&e)) {
    // A field reaching FINALIZE is already reduced: a variance field for
    // STDDEV, a mean field otherwise.
    if (stat != StatKind::kStddev) return *f;
    std::vector<double> values(f->values().begin(), f->values().end());
    std::vector<std::uint8_t> mask(f->mask().begin(), f->mask().end());
    for (auto& v : values) v = std::sqrt(std::max(0.0, v));
    return GridField(f->geometry(), f->variable(), std::move(values), std::move(mask));
  }
  return finalize(to_summary(e), stat);
}

}  // namespace

std::vector<BlockId> partition_sources(const PlanNode& node, std::size_t partition) {
  check_partition(node, partition);
  switch (node.op()) {
    case PlanOp::kSource:
      return {node.blocks()[partition]};
    case PlanOp::kUnion: {
      const auto [parent, local] = locate(node, partition);
      return partition_sources(*parent, local);
    }
    case PlanOp::kCombine: {
      std::vector<BlockId> all;
      const auto& parent = *node.parents().front();
      for (std::size_t i = 0; i < parent.partitions(); ++i) {
        auto s = partition_sources(parent, i);
        all.insert(all.end(), s.begin(), s.end());
      }
      return all;
    }
    default:
      return partition_sources(*node.parents().front(), partition);
  }
}

Payload evaluate_partition(const PlanNode& node, std::size_t partition, EvalContext& ctx) {
  check_partition(node, partition);
  const OperatorRegistry& reg = *ctx.registry;
  switch (node.op()) {
    case PlanOp::kSource: {
      if (ctx.store == nullptr) throw MissingBlockError("no block store to read sources from");
      const Bytes bytes = ctx.store->get_block(node.blocks()[partition], ctx.node);
      ctx.stats.bytes_read += bytes.size();
      Payload out;
      out.emplace_back(parse_sgf(bytes));
      return out;
    }
    case PlanOp::kMap: {
      const MapOperator& m = reg.map(node.operator_ref().name);
      Payload in = evaluate_partition(*node.parents().front(), partition, ctx);
      Payload out;
      out.reserve(in.size());
      for (const auto& e : in) {
        out.push_back(m.apply(e, node.operator_ref().arg));
        ++ctx.stats.invocations;
      }
      reg.count(node.operator_ref().name, in.size());
      return out;
    }
    case PlanOp::kFilter: {
      const Predicate& p = reg.predicate(node.operator_ref().name);
      Payload in = evaluate_partition(*node.parents().front(), partition, ctx);
      Payload out;
      for (auto& e : in) {
        ++ctx.stats.invocations;
        if (p.test(e, node.operator_ref().arg)) {
          out.push_back(std::move(e));
        } else {
          ++ctx.stats.elements_dropped;
        }
      }
      reg.count(node.operator_ref().name, in.size());
      return out;
    }
    case PlanOp::kUnion: {
      const auto [parent, local] = locate(node, partition);
      return evaluate_partition(*parent, local, ctx);
    }
    case PlanOp::kAxisReduce: {
      const Axis axis = parse_axis(node.operator_ref().arg);
      Payload in = evaluate_partition(*node.parents().front(), partition, ctx);
      Payload out;
      out.reserve(in.size());
      for (const auto& e : in) {
        out.emplace_back(reduce_axis(to_summary(e), axis));
        ++ctx.stats.invocations;
      }
      reg.count("axis-reduce", in.size());
      return out;
    }
    case PlanOp::kCombine: {
      const CombineOperator& c = reg.combine(node.operator_ref().name);
      std::optional<Element> result;
      if (ctx.combine_inputs) {
        result = reduce_partials(c, ctx.combine_inputs(node), ctx.stats);
      } else {
        const PlanNode& parent = *node.parents().front();
        CombineInputs partials;
        partials.reserve(parent.partitions());
        for (std::size_t i = 0; i < parent.partitions(); ++i) {
          partials.push_back(fold_partition(c, evaluate_partition(parent, i, ctx), ctx.stats));
        }
        result = reduce_partials(c, partials, ctx.stats);
      }
      Payload out;
      if (result) out.push_back(std::move(*result));
      return out;
    }
    case PlanOp::kFinalize: {
      const StatKind stat = parse_stat(node.operator_ref().arg);
      Payload in = evaluate_partition(*node.parents().front(), partition, ctx);
      Payload out;
      out.reserve(in.size());
      for (const auto& e : in) {
        out.push_back(apply_finalize(e, stat));
        ++ctx.stats.invocations;
      }
      reg.count("finalize", in.size());
      return out;
    }
  }
  throw TypeError("unhandled plan node");
}

std::optional<Element> fold_partition(const CombineOperator& op, const Payload& payload,
                                      EvalStats& stats) {
  if (payload.empty()) return std::nullopt;
  Element acc = op.lift(payload.front());
  for (std::size_t i = 1; i < payload.size(); ++i) acc = op.combine(acc, payload[i]);
  stats.invocations += payload.size();
  OperatorRegistry::global().count(op.name, payload.size());
  return acc;
}

namespace {

std::optional<Element> tree(const CombineOperator& op, const CombineInputs& partials,
                            std::size_t lo, std::size_t hi, EvalStats& stats) {
  if (hi - lo == 1) return partials[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  auto left = tree(op, partials, lo, mid, stats);
  auto right = tree(op, partials, mid, hi, stats);
  if (!left) return right;
  if (!right) return left;
  ++stats.invocations;
  OperatorRegistry::global().count(op.name);
  return op.combine(*left, *right);
}

}  // namespace

std::optional<Element> reduce_partials(const CombineOperator& op, const CombineInputs& partials,
                                       EvalStats& stats) {
  if (partials.empty()) return std::nullopt;
  if (op.order == CombineOperator::Order::kTree) {
    return tree(op, partials, 0, partials.size(), stats);
  }
  std::optional<Element> acc;
  for (const auto& p : partials) {
    if (!p) continue;
    if (!acc) {
      acc = *p;
    } else {
      acc = op.combine(*acc, *p);
      ++stats.invocations;
      OperatorRegistry::global().count(op.name);
    }
  }
  return acc;
}

}  // namespace gridstream
