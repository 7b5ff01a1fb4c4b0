#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "gridstream/digest.hpp"
#include "gridstream/sgf.hpp"

namespace gridstream {

struct NodeId {
  std::uint32_t value = 0;
  auto operator<=>(const NodeId&) const = default;
};

std::string to_string(NodeId node);
// Accepts "n3" or "3". Throws UnknownNodeError on anything else.
NodeId parse_node_id(std::string_view text);

struct BlockId {
  Sha256 content{};
  std::uint64_t sequence = 0;
  auto operator<=>(const BlockId&) const = default;
};

// "<first 16 hex digits of the content hash>-<sequence>"
std::string to_string(const BlockId& id);

using ReplicaMap = std::map<BlockId, std::set<NodeId>>;

// In-memory replicated block store standing in for a distributed file
// system. Each simulated node keeps its own copy of every replica it holds.
// Safe for concurrent put/get; membership changes serialize with writes.
class BlockStore {
 public:
  // `persist_root`, when set, mirrors every replica to
  // <persist_root>/<node-id>/<block-id> for post-mortem inspection.
  explicit BlockStore(std::uint32_t node_count, std::uint32_t replication = 2,
                      std::optional<std::filesystem::path> persist_root = std::nullopt);

  BlockStore(const BlockStore&) = delete;
  BlockStore& operator=(const BlockStore&) = delete;

  std::uint32_t default_replication() const noexcept { return replication_; }
  std::vector<NodeId> nodes() const;
  std::vector<NodeId> live_nodes() const;
  bool is_live(NodeId node) const;

  // Places min(replication, live nodes) copies on the least-loaded live
  // nodes, ties broken round-robin. Throws StoreUnavailableError.
  BlockId put_block(std::span<const std::byte> payload);
  BlockId put_block(std::span<const std::byte> payload, std::uint32_t replication);

  // Reads from a live replica, preferring `caller` when it holds one, and
  // verifies the content hash. Throws MissingBlockError,
  // BlockUnavailableError or IntegrityError.
  Bytes get_block(const BlockId& id, std::optional<NodeId> caller = std::nullopt) const;

  bool contains(const BlockId& id) const;
  std::set<NodeId> replicas(const BlockId& id) const;
  ReplicaMap replica_map() const;
  std::size_t replica_count(NodeId node) const;

  // Stops serving reads and placements from `node` without forgetting its
  // replicas; used between a crash and its detection.
  void mark_unreachable(NodeId node);

  // Forgets every replica on `node` and returns the blocks now below their
  // replication target. Throws UnknownNodeError.
  std::vector<BlockId> drop_node(NodeId node);

  // Copies under-replicated blocks to further live nodes. Returns the
  // number of replicas created.
  std::size_t re_replicate();

  // Sum over blocks of (target - current replicas), clamped at zero.
  std::size_t deficit() const;

  // Test hook: flips one byte of the copy held on `node`.
  void corrupt_replica(const BlockId& id, NodeId node);

 private:
  struct Node {
    bool live = true;
    bool reachable = true;
    std::map<BlockId, std::shared_ptr<const Bytes>> blocks;
  };
  struct BlockInfo {
    std::uint32_t target = 0;
    std::set<NodeId> holders;
  };

  Node& node_ref(NodeId node);
  const Node& node_ref(NodeId node) const;
  std::vector<NodeId> placement_order(const std::set<NodeId>& exclude) const;
  void persist(NodeId node, const BlockId& id, const Bytes& payload) const;

  mutable std::shared_mutex mu_;
  std::uint32_t replication_;
  std::optional<std::filesystem::path> persist_root_;
  std::vector<Node> nodes_;
  std::map<BlockId, BlockInfo> blocks_;
  std::uint64_t next_sequence_ = 0;
  std::uint32_t cursor_ = 0;
};

}  // namespace gridstream
