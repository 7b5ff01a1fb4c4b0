#include "gridstream/dataset.hpp"

#include <atomic>

#include "gridstream/errors.hpp"

namespace gridstream {

namespace {

std::uint64_t next_dataset_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

Dataset::Dataset(BlockStore* store, Cluster* cluster, PlanNodePtr lineage)
    : id_(next_dataset_id()), store_(store), cluster_(cluster), lineage_(std::move(lineage)) {}

Dataset Dataset::from_blocks(BlockStore& store, std::vector<BlockId> blocks, Cluster* cluster) {
  for (const auto& b : blocks) {
    if (!store.contains(b)) throw MissingBlockError("unknown block " + to_string(b));
  }
  return Dataset(&store, cluster, PlanNode::source(std::move(blocks)));
}

Dataset Dataset::from_plan(BlockStore& store, PlanNodePtr lineage, Cluster* cluster) {
  return Dataset(&store, cluster, std::move(lineage));
}

Dataset Dataset::map(OperatorRef op) const {
  return Dataset(store_, cluster_, PlanNode::map(lineage_, std::move(op)));
}

Dataset Dataset::filter(OperatorRef predicate) const {
  return Dataset(store_, cluster_, PlanNode::filter(lineage_, std::move(predicate)));
}

Dataset Dataset::axis_reduce(Axis axis) const {
  return Dataset(store_, cluster_, PlanNode::axis_reduce(lineage_, axis));
}

Dataset Dataset::combine(const std::string& combine_op) const {
  return Dataset(store_, cluster_, PlanNode::combine(lineage_, combine_op));
}

Dataset Dataset::finalize(StatKind stat) const {
  return Dataset(store_, cluster_, PlanNode::finalize(lineage_, stat));
}

Dataset Dataset::union_of(const std::vector<Dataset>& inputs) {
  if (inputs.empty()) throw TypeError("union needs at least one input");
  std::vector<PlanNodePtr> parents;
  for (const auto& d : inputs) {
    if (d.store_ != inputs.front().store_) throw TypeError("cannot union datasets of different stores");
    parents.push_back(d.lineage_);
  }
  return Dataset(inputs.front().store_, inputs.front().cluster_, PlanNode::union_of(parents));
}

std::vector<PartitionSpec> Dataset::partition_specs() const {
  std::vector<PartitionSpec> out;
  for (std::size_t i = 0; i < partitions(); ++i) {
    PartitionSpec spec;
    spec.index = i;
    spec.source_blocks = partition_sources(*lineage_, i);
    std::set<NodeId> holders;
    for (const auto& b : spec.source_blocks) {
      for (NodeId n : store_->replicas(b)) holders.insert(n);
    }
    spec.preferred_nodes.assign(holders.begin(), holders.end());
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<std::pair<std::size_t, Payload>> Dataset::execute(const PlanNodePtr& root,
                                                              BatchMetrics* metrics) const {
  if (cluster_ != nullptr) {
    const JobId job = cluster_->submit(root);
    JobResult result;
    try {
      result = cluster_->await(job);
    } catch (...) {
      if (metrics) *metrics = cluster_->metrics(job);
      throw;
    }
    if (metrics) *metrics = cluster_->metrics(job);
    return std::move(result.partitions);
  }
  std::vector<std::pair<std::size_t, Payload>> out;
  EvalContext ctx;
  ctx.store = store_;
  for (std::size_t i = 0; i < root->partitions(); ++i) {
    out.emplace_back(i, evaluate_partition(*root, i, ctx));
  }
  if (metrics) {
    *metrics = {};
    metrics->operator_invocations = ctx.stats.invocations;
    metrics->bytes_read = ctx.stats.bytes_read;
    metrics->elements_dropped = ctx.stats.elements_dropped;
    metrics->tasks_total = root->partitions();
    metrics->finished = true;
  }
  return out;
}

std::vector<std::pair<std::size_t, Element>> Dataset::collect(BatchMetrics* metrics) const {
  std::vector<std::pair<std::size_t, Element>> out;
  for (auto& [index, payload] : execute(lineage_, metrics)) {
    for (auto& e : payload) out.emplace_back(index, std::move(e));
  }
  return out;
}

std::size_t Dataset::count(BatchMetrics* metrics) const {
  std::size_t n = 0;
  for (const auto& [index, payload] : execute(lineage_, metrics)) n += payload.size();
  return n;
}

Element Dataset::reduce(const std::string& combine_op, BatchMetrics* metrics) const {
  const auto root = PlanNode::combine(lineage_, combine_op);
  auto parts = execute(root, metrics);
  if (parts.empty() || parts.front().second.empty()) {
    return OperatorRegistry::global().combine(combine_op).identity();
  }
  return std::move(parts.front().second.front());
}

Payload Dataset::recompute_partition(std::size_t index) const {
  EvalContext ctx;
  ctx.store = store_;
  try {
    return evaluate_partition(*lineage_, index, ctx);
  } catch (const BlockUnavailableError& e) {
    throw UnrecoverablePartitionError("partition " + std::to_string(index) +
                                      " cannot be rebuilt: " + e.what());
  }
}

}  // namespace gridstream
