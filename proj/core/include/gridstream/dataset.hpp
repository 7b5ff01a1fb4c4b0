#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridstream/blockstore.hpp"
#include "gridstream/cluster.hpp"
#include "gridstream/plan.hpp"

namespace gridstream {

struct PartitionSpec {
  std::size_t index = 0;
  std::vector<BlockId> source_blocks;
  std::vector<NodeId> preferred_nodes;  // current holders of the source blocks
};

// Immutable, lazily evaluated, partitioned collection. Transformations only
// extend the lineage; actions run it, on the cluster when one is attached,
// otherwise inline on the calling thread.
class Dataset {
 public:
  // Throws MissingBlockError for ids the store does not know.
  static Dataset from_blocks(BlockStore& store, std::vector<BlockId> blocks,
                             Cluster* cluster = nullptr);
  static Dataset from_plan(BlockStore& store, PlanNodePtr lineage, Cluster* cluster = nullptr);

  Dataset map(OperatorRef op) const;
  Dataset filter(OperatorRef predicate) const;
  Dataset axis_reduce(Axis axis) const;
  Dataset combine(const std::string& combine_op) const;
  Dataset finalize(StatKind stat) const;
  // Inputs must share element kind and store. Throws TypeError.
  static Dataset union_of(const std::vector<Dataset>& inputs);

  std::uint64_t id() const noexcept { return id_; }
  const PlanNodePtr& lineage() const noexcept { return lineage_; }
  ElementKind element_kind() const noexcept { return lineage_->output_kind(); }
  std::size_t partitions() const noexcept { return lineage_->partitions(); }
  std::vector<PartitionSpec> partition_specs() const;
  std::size_t dag_length() const { return gridstream::dag_length(*lineage_); }
  Cluster* cluster() const noexcept { return cluster_; }
  BlockStore& store() const noexcept { return *store_; }

  // Actions. When `metrics` is given and a cluster runs the job, the job's
  // metrics are copied there.
  std::vector<std::pair<std::size_t, Element>> collect(BatchMetrics* metrics = nullptr) const;
  std::size_t count(BatchMetrics* metrics = nullptr) const;
  // An empty dataset reduces to the operator's declared identity.
  Element reduce(const std::string& combine_op, BatchMetrics* metrics = nullptr) const;

  // Replays lineage for one partition, bypassing caches. Throws
  // UnrecoverablePartitionError when a source block has no live replica.
  Payload recompute_partition(std::size_t index) const;

 private:
  Dataset(BlockStore* store, Cluster* cluster, PlanNodePtr lineage);
  std::vector<std::pair<std::size_t, Payload>> execute(const PlanNodePtr& root,
                                                       BatchMetrics* metrics) const;

  std::uint64_t id_ = 0;
  BlockStore* store_ = nullptr;
  Cluster* cluster_ = nullptr;
  PlanNodePtr lineage_;
};

}  // namespace gridstream
