#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "gridstream/blockstore.hpp"
#include "gridstream/errors.hpp"
#include "support.hpp"

using namespace gridstream;

namespace {

Bytes payload(std::string_view s) {
  return Bytes(reinterpret_cast<const std::byte*>(s.data()),
               reinterpret_cast<const std::byte*>(s.data()) + s.size());
}

}  // namespace

TEST(BlockStore, PutGetWithReplication) {
  BlockStore store(3, 2);
  const auto id = store.put_block(payload("hello"));
  EXPECT_EQ(store.get_block(id), payload("hello"));
  EXPECT_EQ(store.replicas(id).size(), 2u);
  EXPECT_TRUE(store.contains(id));
}

TEST(BlockStore, IdenticalPayloadsGetDistinctIds) {
  BlockStore store(2, 2);
  const auto a = store.put_block(payload("same"));
  const auto b = store.put_block(payload("same"));
  EXPECT_NE(a, b);
  EXPECT_EQ(a.content, b.content);
  EXPECT_NE(to_string(a), to_string(b));
}

TEST(BlockStore, ReplicationCappedByLiveNodes) {
  BlockStore store(2, 3);
  EXPECT_EQ(store.replicas(store.put_block(payload("x"))).size(), 2u);
  store.drop_node(NodeId{0});
  EXPECT_EQ(store.replicas(store.put_block(payload("y"))).size(), 1u);
  store.drop_node(NodeId{1});
  EXPECT_THROW(store.put_block(payload("z")), StoreUnavailableError);
}

TEST(BlockStore, LoadBalancesPlacement) {
  BlockStore store(4, 2);
  for (int i = 0; i < 10; ++i) store.put_block(payload(std::to_string(i)));
  for (NodeId n : store.nodes()) EXPECT_EQ(store.replica_count(n), 5u);
}

TEST(BlockStore, ReadsDoNotChangeReplicaMap) {
  BlockStore store(3, 2);
  std::vector<BlockId> ids;
  for (int i = 0; i < 6; ++i) ids.push_back(store.put_block(payload("b" + std::to_string(i))));
  const auto before = store.replica_map();
  for (const auto& id : ids) {
    for (NodeId n : store.nodes()) store.get_block(id, n);
  }
  EXPECT_EQ(store.replica_map(), before);
}

TEST(BlockStore, UnknownAndUnavailableBlocks) {
  BlockStore store(2, 1);
  EXPECT_THROW(store.get_block(BlockId{}), MissingBlockError);
  const auto id = store.put_block(payload("solo"));
  const NodeId holder = *store.replicas(id).begin();
  store.drop_node(holder);
  EXPECT_THROW(store.get_block(id), BlockUnavailableError);
  EXPECT_EQ(store.deficit(), 1u);
}

TEST(BlockStore, UnreachableNodeKeepsReplicasButStopsServing) {
  BlockStore store(2, 1);
  const auto id = store.put_block(payload("p"));
  const NodeId holder = *store.replicas(id).begin();
  store.mark_unreachable(holder);
  EXPECT_THROW(store.get_block(id), BlockUnavailableError);
  EXPECT_EQ(store.replicas(id).size(), 1u);
  EXPECT_EQ(store.drop_node(holder), std::vector<BlockId>{id});
}

TEST(BlockStore, CorruptionDetectedOnRead) {
  BlockStore store(2, 2);
  const auto id = store.put_block(payload("integrity"));
  store.corrupt_replica(id, NodeId{0});
  // The other replica still serves, even to a caller on the corrupt node.
  EXPECT_EQ(store.get_block(id, NodeId{0}), payload("integrity"));
  store.corrupt_replica(id, NodeId{1});
  EXPECT_THROW(store.get_block(id), IntegrityError);
}

TEST(BlockStore, UnknownNodeIsTyped) {
  BlockStore store(2, 2);
  EXPECT_THROW(store.drop_node(NodeId{7}), UnknownNodeError);
  EXPECT_THROW(parse_node_id("node3"), UnknownNodeError);
  EXPECT_EQ(parse_node_id("n3"), NodeId{3});
  EXPECT_EQ(parse_node_id("3"), NodeId{3});
}

TEST(BlockStore, ReReplicateRestoresTargets) {
  BlockStore store(4, 2);
  std::vector<BlockId> ids;
  for (int i = 0; i < 12; ++i) ids.push_back(store.put_block(payload("r" + std::to_string(i))));
  const auto under = store.drop_node(NodeId{2});
  EXPECT_EQ(under.size(), 6u);
  EXPECT_EQ(store.deficit(), 6u);
  EXPECT_EQ(store.re_replicate(), 6u);
  EXPECT_EQ(store.deficit(), 0u);
  for (const auto& id : ids) {
    EXPECT_EQ(store.replicas(id).size(), 2u);
    EXPECT_FALSE(store.replicas(id).contains(NodeId{2}));
  }
  EXPECT_EQ(store.re_replicate(), 0u);
}

TEST(BlockStoreProperty, SurvivesReplicationMinusOneFailures) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t nodes = 3 + static_cast<std::uint32_t>(rng() % 4);
    const std::uint32_t r = 2 + static_cast<std::uint32_t>(rng() % 2);
    BlockStore store(nodes, r);
    std::vector<std::pair<BlockId, Bytes>> blocks;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 30); i < n; ++i) {
      Bytes b(1 + rng() % 16);
      for (auto& x : b) x = static_cast<std::byte>(rng());
      blocks.emplace_back(store.put_block(b), b);
    }
    std::vector<std::uint32_t> order(nodes);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::uint32_t k = 0; k + 1 < r; ++k) store.drop_node(NodeId{order[k]});
    for (const auto& [id, b] : blocks) ASSERT_EQ(store.get_block(id), b) << "trial " << trial;
    store.re_replicate();
    const std::size_t live = store.live_nodes().size();
    for (const auto& [id, b] : blocks) {
      ASSERT_EQ(store.replicas(id).size(), std::min<std::size_t>(r, live)) << "trial " << trial;
    }
  }
}

TEST(BlockStore, PersistsReplicasPerNode) {
  gstest::TempDir dir;
  BlockStore store(2, 2, dir.path());
  const auto id = store.put_block(payload("disk"));
  for (NodeId n : store.replicas(id)) {
    EXPECT_EQ(gstest::slurp(dir / to_string(n) / to_string(id)), "disk");
  }
}

TEST(BlockStore, ConcurrentPutAndGet) {
  BlockStore store(3, 2);
  std::vector<std::thread> threads;
  std::vector<std::vector<std::pair<BlockId, Bytes>>> written(4);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        Bytes b = payload("t" + std::to_string(t) + "-" + std::to_string(i));
        const auto id = store.put_block(b);
        EXPECT_EQ(store.get_block(id), b);
        written[t].emplace_back(id, std::move(b));
      }
    });
  }
  for (auto& t : threads) t.join();
  std::set<BlockId> ids;
  for (const auto& w : written) {
    for (const auto& [id, b] : w) {
      ids.insert(id);
      EXPECT_EQ(store.get_block(id), b);
    }
  }
  EXPECT_EQ(ids.size(), 800u);
}
