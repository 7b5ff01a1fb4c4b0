#include "gridstream/blockstore.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include "gridstream/errors.hpp"

namespace gridstream {

std::string to_string(NodeId node) { return "n" + std::to_string(node.value); }

NodeId parse_node_id(std::string_view text) {
  std::string_view digits = text;
  if (!digits.empty() && digits.front() == 'n') digits.remove_prefix(1);
  if (digits.empty() || digits.size() > 9 ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw UnknownNodeError("not a node id: '" + std::string(text) + "'");
  }
  return NodeId{static_cast<std::uint32_t>(std::stoul(std::string(digits)))};
}

std::string to_string(const BlockId& id) {
  return to_hex(std::span(id.content).first(8)) + "-" + std::to_string(id.sequence);
}

BlockStore::BlockStore(std::uint32_t node_count, std::uint32_t replication,
                       std::optional<std::filesystem::path> persist_root)
    : replication_(replication), persist_root_(std::move(persist_root)), nodes_(node_count) {
  if (replication_ == 0) throw ConfigError("replication factor must be at least 1");
}

BlockStore::Node& BlockStore::node_ref(NodeId node) {
  if (node.value >= nodes_.size()) throw UnknownNodeError("unknown node " + to_string(node));
  return nodes_[node.value];
}

const BlockStore::Node& BlockStore::node_ref(NodeId node) const {
  if (node.value >= nodes_.size()) throw UnknownNodeError("unknown node " + to_string(node));
  return nodes_[node.value];
}

std::vector<NodeId> BlockStore::nodes() const {
  std::vector<NodeId> out;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) out.push_back(NodeId{i});
  return out;
}

std::vector<NodeId> BlockStore::live_nodes() const {
  std::shared_lock lock(mu_);
  std::vector<NodeId> out;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].live) out.push_back(NodeId{i});
  }
  return out;
}

bool BlockStore::is_live(NodeId node) const {
  std::shared_lock lock(mu_);
  return node_ref(node).live;
}

std::vector<NodeId> BlockStore::placement_order(const std::set<NodeId>& exclude) const {
  std::vector<NodeId> candidates;
  const auto n = static_cast<std::uint32_t>(nodes_.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    const NodeId id{i};
    if (nodes_[i].live && nodes_[i].reachable && !exclude.contains(id)) candidates.push_back(id);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
    const auto la = nodes_[a.value].blocks.size();
    const auto lb = nodes_[b.value].blocks.size();
    if (la != lb) return la < lb;
    return (a.value + n - cursor_ % n) % n < (b.value + n - cursor_ % n) % n;
  });
  return candidates;
}

void BlockStore::persist(NodeId node, const BlockId& id, const Bytes& payload) const {
  if (!persist_root_) return;
  const auto dir = *persist_root_ / to_string(node);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  write_file_atomic(dir / to_string(id), payload);
}

BlockId BlockStore::put_block(std::span<const std::byte> payload) {
  return put_block(payload, replication_);
}

BlockId BlockStore::put_block(std::span<const std::byte> payload, std::uint32_t replication) {
  if (replication == 0) throw ConfigError("replication factor must be at least 1");
  auto data = std::make_shared<const Bytes>(payload.begin(), payload.end());
  const Sha256 digest = sha256(payload);

  std::unique_lock lock(mu_);
  const auto order = placement_order({});
  if (order.empty()) throw StoreUnavailableError("no live nodes to store a block on");
  const BlockId id{digest, next_sequence_++};
  BlockInfo info;
  info.target = replication;
  const std::size_t copies = std::min<std::size_t>(replication, order.size());
  for (std::size_t i = 0; i < copies; ++i) {
    nodes_[order[i].value].blocks.emplace(id, data);
    info.holders.insert(order[i]);
    persist(order[i], id, *data);
  }
  blocks_.emplace(id, std::move(info));
  ++cursor_;
  return id;
}

Bytes BlockStore::get_block(const BlockId& id, std::optional<NodeId> caller) const {
  std::shared_lock lock(mu_);
  const auto it = blocks_.find(id);
  if (it == blocks_.end()) throw MissingBlockError("unknown block " + to_string(id));

  std::vector<NodeId> order;
  if (caller && it->second.holders.contains(*caller)) order.push_back(*caller);
  for (NodeId n : it->second.holders) {
    if (!caller || n != *caller) order.push_back(n);
  }
  bool corrupt = false;
  for (NodeId n : order) {
    const Node& node = nodes_[n.value];
    if (!node.live || !node.reachable) continue;
    const auto& payload = node.blocks.at(id);
    if (sha256(*payload) != id.content) {
      corrupt = true;
      continue;
    }
    return *payload;
  }
  if (corrupt) throw IntegrityError("every reachable replica of " + to_string(id) + " is corrupt");
  throw BlockUnavailableError("no live replica of block " + to_string(id));
}

bool BlockStore::contains(const BlockId& id) const {
  std::shared_lock lock(mu_);
  return blocks_.contains(id);
}

std::set<NodeId> BlockStore::replicas(const BlockId& id) const {
  std::shared_lock lock(mu_);
  const auto it = blocks_.find(id);
  if (it == blocks_.end()) throw MissingBlockError("unknown block " + to_string(id));
  return it->second.holders;
}

ReplicaMap BlockStore::replica_map() const {
  std::shared_lock lock(mu_);
  ReplicaMap out;
  for (const auto& [id, info] : blocks_) out.emplace(id, info.holders);
  return out;
}

std::size_t BlockStore::replica_count(NodeId node) const {
  std::shared_lock lock(mu_);
  return node_ref(node).blocks.size();
}

void BlockStore::mark_unreachable(NodeId node) {
  std::unique_lock lock(mu_);
  node_ref(node).reachable = false;
}

std::vector<BlockId> BlockStore::drop_node(NodeId node) {
  std::unique_lock lock(mu_);
  Node& n = node_ref(node);
  n.live = false;
  n.reachable = false;
  std::vector<BlockId> under;
  for (const auto& [id, payload] : n.blocks) {
    BlockInfo& info = blocks_.at(id);
    info.holders.erase(node);
    if (info.holders.size() < info.target) under.push_back(id);
  }
  n.blocks.clear();
  return under;
}

std::size_t BlockStore::re_replicate() {
  std::unique_lock lock(mu_);
  std::size_t created = 0;
  for (auto& [id, info] : blocks_) {
    if (info.holders.size() >= info.target) continue;
    std::shared_ptr<const Bytes> source;
    for (NodeId h : info.holders) {
      const Node& holder = nodes_[h.value];
      if (!holder.live || !holder.reachable) continue;
      const auto& p = holder.blocks.at(id);
      if (sha256(*p) == id.content) {
        source = p;
        break;
      }
    }
    if (!source) continue;
    for (NodeId target : placement_order(info.holders)) {
      if (info.holders.size() >= info.target) break;
      nodes_[target.value].blocks.emplace(id, source);
      info.holders.insert(target);
      persist(target, id, *source);
      ++created;
    }
  }
  return created;
}

std::size_t BlockStore::deficit() const {
  std::shared_lock lock(mu_);
  std::size_t d = 0;
  for (const auto& [id, info] : blocks_) {
    if (info.holders.size() < info.target) d += info.target - info.holders.size();
  }
  return d;
}

void BlockStore::corrupt_replica(const BlockId& id, NodeId node) {
  std::unique_lock lock(mu_);
  Node& n = node_ref(node);
  auto it = n.blocks.find(id);
  if (it == n.blocks.end()) throw MissingBlockError("node does not hold " + to_string(id));
  auto copy = std::make_shared<Bytes>(*it->second);
  if (copy->empty()) {
    copy->push_back(std::byte{0});
  } else {
    (*copy)[copy->size() / 2] ^= std::byte{0xFF};
  }
  it->second = std::move(copy);
}

}  // namespace gridstream
