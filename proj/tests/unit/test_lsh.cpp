#include <doctest.h>

#include <cmath>
#include <random>

#include "fedmol/lsh.hpp"
#include "support.hpp"

using namespace fedmol;

namespace {

// Shard in which the bits in `high` have entropy 1 and `mid` a lower,
// non-zero entropy; every other bit is constant.
ClientShard shard_with(int id, std::vector<int> high, std::vector<int> mid, std::size_t n_bits = 16) {
  ClientShard s{id, {}};
  for (int i = 0; i < 8; ++i) {
    std::vector<int> on;
    for (int b : high)
      if (i % 2) on.push_back(b);
    for (int b : mid)
      if (i == 0) on.push_back(b);
    s.records.push_back(testing::record("c" + std::to_string(id) + "_" + std::to_string(i), on, n_bits, "s"));
  }
  return s;
}

}  // namespace

TEST_CASE("binary entropy is symmetric") {
  CHECK(binary_entropy(0, 10) == 0.0);
  CHECK(binary_entropy(10, 10) == 0.0);
  CHECK(binary_entropy(5, 10) == 1.0);
  for (std::size_t k = 0; k <= 17; ++k) CHECK(binary_entropy(k, 17) == binary_entropy(17 - k, 17));
}

TEST_CASE("top entropy bits break ties toward the lower index") {
  const std::vector<double> h{0.5, 1.0, 0.5, 1.0, 0.2};
  CHECK(top_entropy_bits(h, 2) == std::vector<std::size_t>{1, 3});
  CHECK(top_entropy_bits(h, 3) == std::vector<std::size_t>{0, 1, 3});
  CHECK_THROWS_AS(top_entropy_bits(h, 0), std::invalid_argument);
  CHECK_THROWS_AS(top_entropy_bits(h, 6), std::invalid_argument);
}

TEST_CASE("identical shards keep the full top set") {
  std::mt19937_64 rng(1);
  const auto recs = testing::random_records(rng, 30, 64, 0.3, 3);
  std::vector<ClientShard> shards{{0, recs}, {1, recs}, {2, recs}};
  const auto res = fed_lsh(shards, FedLshConfig{8, 5, false});
  CHECK(res.global_bits.size() == 8);
  CHECK(res.doublings == 0);
  CHECK(res.global_bits == local_top_entropy_bits(recs, 8));
}

TEST_CASE("empty intersection doubles n_he") {
  std::vector<ClientShard> shards{shard_with(0, {1, 2}, {3, 4}), shard_with(1, {3, 4}, {1, 2})};
  CHECK(local_top_entropy_bits(shards[0].records, 2) == std::vector<std::size_t>{1, 2});
  CHECK(local_top_entropy_bits(shards[1].records, 2) == std::vector<std::size_t>{3, 4});
  const auto res = fed_lsh(shards, FedLshConfig{2, 5, false});
  CHECK(res.doublings == 1);
  CHECK(res.n_he_used == 4);
  CHECK(res.global_bits == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(res.log.size() == 4);
}

TEST_CASE("retry limit raises a protocol error") {
  std::vector<ClientShard> shards{shard_with(0, {1, 2}, {3, 4}), shard_with(1, {3, 4}, {1, 2})};
  CHECK_THROWS_AS(fed_lsh(shards, FedLshConfig{2, 0, false}), ProtocolError);
  const TopBitsQuery disjoint = [](std::size_t) {
    return std::vector<std::vector<std::size_t>>{{0}, {1}};
  };
  CHECK_THROWS_AS(intersect_bits(disjoint, 1, 10, 2), ProtocolError);
}

TEST_CASE("bins follow first occurrence") {
  std::vector<MoleculeRecord> recs{testing::record("a", {0}, 8, "s"), testing::record("b", {1}, 8, "s"),
                                   testing::record("c", {0, 5}, 8, "s"), testing::record("d", {}, 8, "s")};
  const std::vector<std::size_t> bits{0, 1};
  CHECK(bin_key(recs[0].fingerprint, bits) == "10");
  const auto a = lsh_assign(recs, bits, Method::fed_lsh);
  CHECK(a.labels == std::vector<int>{0, 1, 0, 2});
  CHECK(a.cluster_keys == std::vector<std::string>{"10", "01", "00"});
}

TEST_CASE("single-client Fed-LSH equals centralized LSH and the pooled oracle") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto recs = testing::random_records(rng, 25, 48, 0.2 + 0.02 * (t % 10), 4);
    const std::size_t n_he = 1 + static_cast<std::size_t>(t % 12);
    std::vector<ClientShard> shards{{0, recs}};
    const auto fed = fed_lsh(shards, FedLshConfig{n_he, 5, false});
    const auto cen = centralized_lsh(recs, n_he);
    CHECK(fed.assignments[0].labels == cen.labels);
    const auto b = testing::bits(recs);
    const auto chosen = oracle::top_bits(b, n_he);
    CHECK(fed.global_bits == chosen);
    CHECK(cen.labels == oracle::lsh_labels(b, chosen));
  }
}

TEST_CASE("parallel and serial Fed-LSH agree") {
  std::mt19937_64 rng(17);
  std::vector<ClientShard> shards;
  for (int c = 0; c < 4; ++c) shards.push_back({c, testing::random_records(rng, 20, 64, 0.3, 3)});
  const auto a = fed_lsh(shards, FedLshConfig{16, 5, false});
  const auto b = fed_lsh(shards, FedLshConfig{16, 5, true});
  CHECK(a.global_bits == b.global_bits);
  for (std::size_t c = 0; c < shards.size(); ++c) CHECK(a.assignments[c] == b.assignments[c]);
}
