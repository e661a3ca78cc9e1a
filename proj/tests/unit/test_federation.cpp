#include <doctest.h>

#include <atomic>
#include <mutex>
#include <set>

#include "fedmol/federation.hpp"

using namespace fedmol;

namespace {

struct Echo {
  using ClientData = int;
  using Message = int;
  using State = std::vector<int>;  // every message seen, in fold order
  using Output = int;

  State init_server() const { return {}; }
  Message client_round(const int& data, const State&, const ClientContext& ctx) const {
    return data * 100 + ctx.round;
  }
  State aggregate(const State& s, std::span<const Message> msgs, int) const {
    State out = s;
    out.insert(out.end(), msgs.begin(), msgs.end());
    return out;
  }
  Output client_finalize(const int& data, const State& s, const ClientContext&) const {
    return data + static_cast<int>(s.size());
  }
};

// Records which shard each client call touched and the seeds it used.
struct Probe {
  struct Shard {
    int owner;
  };
  using ClientData = Shard;
  using SetupMessage = int;
  using Message = std::uint64_t;
  using State = std::uint64_t;
  using Output = int;

  mutable std::mutex mu;
  mutable std::set<std::pair<int, int>> touched;  // (client id, shard owner)
  mutable std::atomic<int> violations{0};

  void note(const Shard& s, const ClientContext& ctx) const {
    std::lock_guard lock(mu);
    touched.emplace(ctx.client_id, s.owner);
    if (s.owner != ctx.client_id) ++violations;
  }
  SetupMessage client_setup(const Shard& s, const ClientContext& ctx) const {
    note(s, ctx);
    return s.owner;
  }
  State init_server(std::span<const SetupMessage> setup) const { return setup.size(); }
  Message client_round(const Shard& s, const State& st, const ClientContext& ctx) const {
    note(s, ctx);
    return st ^ ctx.seed;
  }
  State aggregate(const State& st, std::span<const Message> msgs, int) const {
    State out = st;
    for (auto m : msgs) out = out * 31 + m;  // order-sensitive fold
    return out;
  }
  Output client_finalize(const Shard& s, const State&, const ClientContext& ctx) const {
    note(s, ctx);
    return s.owner;
  }
  std::size_t payload_size(const Message&) const { return 1; }
};

struct Stopper {
  using ClientData = int;
  using Message = int;
  using State = int;
  using Output = int;
  State init_server() const { return 0; }
  bool finished(const State& s) const { return s >= 2; }
  Message client_round(const int&, const State&, const ClientContext&) const { return 1; }
  State aggregate(const State& s, std::span<const Message>, int) const { return s + 1; }
  Output client_finalize(const int&, const State& s, const ClientContext&) const { return s; }
};

}  // namespace

TEST_CASE("echo protocol logs one message per client per round") {
  const std::vector<int> shards{1, 2, 3};
  const auto res = run_federation(std::span<const int>(shards), Echo{}, FederationConfig{3, 2, 0, false});
  CHECK(res.log.size() == 6);
  CHECK(res.rounds_run == 2);
  CHECK(res.server_state == std::vector<int>{100, 200, 300, 101, 201, 301});
  CHECK(res.local_outputs == std::vector<int>{7, 8, 9});
}

TEST_CASE("parallel and serial runs agree and clients only see their own shard") {
  std::vector<Probe::Shard> shards{{0}, {1}, {2}, {3}};
  Probe serial_probe, parallel_probe;
  const auto s = run_federation(std::span<const Probe::Shard>(shards), serial_probe, FederationConfig{4, 3, 42, false});
  const auto p = run_federation(std::span<const Probe::Shard>(shards), parallel_probe, FederationConfig{4, 3, 42, true});
  CHECK(s.server_state == p.server_state);
  CHECK(s.local_outputs == p.local_outputs);
  CHECK(s.log == p.log);
  CHECK(serial_probe.violations == 0);
  CHECK(parallel_probe.violations == 0);
  CHECK(serial_probe.touched.size() == 4);
  CHECK(s.log.size() == 12);
  for (const auto& e : s.log) CHECK(e.payload_size == 1);
}

TEST_CASE("client seeds depend on global seed, client and round") {
  CHECK(client_seed(1, 0, 0) != client_seed(1, 1, 0));
  CHECK(client_seed(1, 0, 0) != client_seed(1, 0, 1));
  CHECK(client_seed(1, 0, 0) != client_seed(2, 0, 0));
  CHECK(client_seed(1, 3, 4) == client_seed(1, 3, 4));
}

TEST_CASE("early stop and argument checks") {
  const std::vector<int> shards{0, 0};
  const auto res = run_federation(std::span<const int>(shards), Stopper{}, FederationConfig{2, 10, 0, false});
  CHECK(res.rounds_run == 2);
  CHECK(res.local_outputs == std::vector<int>{2, 2});
  CHECK_THROWS_AS(run_federation(std::span<const int>(shards), Stopper{}, FederationConfig{3, 1, 0, false}),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_federation(std::span<const int>(shards), Stopper{}, FederationConfig{2, 0, 0, false}),
                  std::invalid_argument);
}
