#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <future>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedmol/rng.hpp"

namespace fedmol {

struct FederationConfig {
  int n_clients = 1;
  int rounds = 1;
  std::uint64_t seed = 0;
  bool parallel = false;  // run clients of a round concurrently
};

/// What a client learns about itself each round. Clients never see another
/// client's data; the server only ever sees messages.
struct ClientContext {
  int client_id = 0;
  int round = 0;  // 0-based; -1 during setup and finalization
  std::uint64_t seed = 0;
};

struct MessageLogEntry {
  int round = 0;
  int client_id = 0;
  std::size_t payload_size = 0;  // protocol-defined units, 0 if not reported

  friend bool operator==(const MessageLogEntry&, const MessageLogEntry&) = default;
};

/// Raised by a protocol's server step when aggregation cannot proceed.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class State, class Output>
struct ProtocolResult {
  State server_state;
  std::vector<Output> local_outputs;  // indexed by client id
  std::vector<MessageLogEntry> log;
  int rounds_run = 0;
};

// clang-format off
template <class P>
concept FederatedProtocol = requires(const P& p,
                                     const typename P::ClientData& data,
                                     const typename P::State& state,
                                     const ClientContext& ctx,
                                     std::span<const typename P::Message> messages) {
  { p.client_round(data, state, ctx) } -> std::same_as<typename P::Message>;
  { p.aggregate(state, messages, ctx.round) } -> std::same_as<typename P::State>;
  { p.client_finalize(data, state, ctx) } -> std::same_as<typename P::Output>;
};

/// Optional one-shot setup: each client may contribute a SetupMessage from
/// which the server builds its initial state.
template <class P>
concept HasSetup = requires(const P& p, const typename P::ClientData& data, const ClientContext& ctx,
                            std::span<const typename P::SetupMessage> setup) {
  { p.client_setup(data, ctx) } -> std::same_as<typename P::SetupMessage>;
  { p.init_server(setup) } -> std::same_as<typename P::State>;
};

template <class P>
concept HasPlainInit = requires(const P& p) {
  { p.init_server() } -> std::same_as<typename P::State>;
};

template <class P>
concept HasEarlyStop = requires(const P& p, const typename P::State& s) {
  { p.finished(s) } -> std::convertible_to<bool>;
};

template <class P>
concept ReportsPayloadSize = requires(const P& p, const typename P::Message& m) {
  { p.payload_size(m) } -> std::convertible_to<std::size_t>;
};
// clang-format on

inline std::uint64_t client_seed(std::uint64_t global, int client_id, int round) {
  return derive_seed(global, {static_cast<std::uint64_t>(client_id),
                              static_cast<std::uint64_t>(static_cast<std::int64_t>(round))});
}

namespace detail {

template <class F>
auto map_clients(int n, bool parallel, F&& fn) {
  using R = decltype(fn(0));
  std::vector<R> out;
  out.reserve(static_cast<std::size_t>(n));
  if (!parallel) {
    for (int c = 0; c < n; ++c) out.push_back(fn(c));
    return out;
  }
  std::vector<std::future<R>> futures;
  futures.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) futures.push_back(std::async(std::launch::async, fn, c));
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace detail

/// Round-based in-process federation. Each round broadcasts the server
/// state, collects one message per client, and folds them in ascending
/// client id order. Results do not depend on client scheduling.
template <FederatedProtocol P>
  requires(HasSetup<P> || HasPlainInit<P>)
ProtocolResult<typename P::State, typename P::Output> run_federation(
    std::span<const typename P::ClientData> shards, const P& protocol, const FederationConfig& cfg) {
  if (static_cast<int>(shards.size()) != cfg.n_clients)
    throw std::invalid_argument("run_federation: got " + std::to_string(shards.size()) +
                                " shards for " + std::to_string(cfg.n_clients) + " clients");
  if (cfg.rounds < 1) throw std::invalid_argument("run_federation: rounds must be >= 1");

  using State = typename P::State;
  using Message = typename P::Message;
  ProtocolResult<State, typename P::Output> result;

  auto context = [&](int client, int round) {
    return ClientContext{client, round, client_seed(cfg.seed, client, round)};
  };

  State state = [&] {
    if constexpr (HasSetup<P>) {
      auto setup = detail::map_clients(cfg.n_clients, cfg.parallel, [&](int c) {
        return protocol.client_setup(shards[static_cast<std::size_t>(c)], context(c, -1));
      });
      return protocol.init_server(std::span<const typename P::SetupMessage>(setup));
    } else {
      return protocol.init_server();
    }
  }();

  for (int round = 0; round < cfg.rounds; ++round) {
    if constexpr (HasEarlyStop<P>) {
      if (protocol.finished(state)) break;
    }
    std::vector<Message> messages = detail::map_clients(cfg.n_clients, cfg.parallel, [&](int c) {
      return protocol.client_round(shards[static_cast<std::size_t>(c)], state, context(c, round));
    });
    for (int c = 0; c < cfg.n_clients; ++c) {
      std::size_t size = 0;
      if constexpr (ReportsPayloadSize<P>) size = protocol.payload_size(messages[static_cast<std::size_t>(c)]);
      result.log.push_back({round, c, size});
    }
    state = protocol.aggregate(state, std::span<const Message>(messages), round);
    ++result.rounds_run;
  }

  result.local_outputs = detail::map_clients(cfg.n_clients, cfg.parallel, [&](int c) {
    return protocol.client_finalize(shards[static_cast<std::size_t>(c)], state, context(c, -1));
  });
  result.server_state = std::move(state);
  return result;
}

}  // namespace fedmol
