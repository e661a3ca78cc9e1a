#include "fedmol/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace fedmol {

double binary_entropy(std::size_t ones, std::size_t total) {
  if (total == 0 || ones == 0 || ones >= total) return 0.0;
  // Evaluate from the smaller count so H(q) and H(1-q) are bitwise equal.
  const std::size_t lo = std::min(ones, total - ones);
  const double a = static_cast<double>(lo) / static_cast<double>(total);
  const double b = static_cast<double>(total - lo) / static_cast<double>(total);
  return -a * std::log2(a) - b * std::log2(b);
}

std::vector<double> bit_entropies(const std::vector<MoleculeRecord>& records) {
  if (records.empty()) return {};
  const std::size_t F = records.front().fingerprint.size();
  std::vector<std::size_t> ones(F, 0);
  for (const auto& r : records) {
    if (r.fingerprint.size() != F) throw std::invalid_argument("bit_entropies: length mismatch");
    for (auto b : r.fingerprint.on_bits()) ++ones[b];
  }
  std::vector<double> h(F);
  for (std::size_t b = 0; b < F; ++b) h[b] = binary_entropy(ones[b], records.size());
  return h;
}

std::vector<std::size_t> top_entropy_bits(const std::vector<double>& entropies, std::size_t n_he) {
  if (n_he < 1 || n_he > entropies.size())
    throw std::invalid_argument("top_entropy_bits: n_he must be in [1, " +
                                std::to_string(entropies.size()) + "]");
  std::vector<std::size_t> order(entropies.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entropies[a] > entropies[b]; });
  order.resize(n_he);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> local_top_entropy_bits(const std::vector<MoleculeRecord>& records,
                                                std::size_t n_he) {
  if (records.empty()) throw std::invalid_argument("local_top_entropy_bits: empty shard");
  return top_entropy_bits(bit_entropies(records), n_he);
}

std::vector<std::size_t> intersect_sets(std::span<const std::vector<std::size_t>> sets) {
  if (sets.empty()) return {};
  std::vector<std::size_t> acc = sets.front();
  for (std::size_t i = 1; i < sets.size(); ++i) {
    std::vector<std::size_t> next;
    std::set_intersection(acc.begin(), acc.end(), sets[i].begin(), sets[i].end(),
                          std::back_inserter(next));
    acc = std::move(next);
  }
  return acc;
}

BitIntersection intersect_bits(const TopBitsQuery& query, std::size_t n_he_start, int max_doublings,
                               std::size_t n_bits) {
  if (n_he_start < 1 || n_he_start > n_bits)
    throw std::invalid_argument("intersect_bits: n_he out of range");
  BitIntersection out{{}, n_he_start, 0};
  while (true) {
    const auto sets = query(out.n_he);
    if (sets.empty()) throw ProtocolError("intersect_bits: no client reported a bit set");
    out.bits = intersect_sets(sets);
    if (!out.bits.empty()) return out;
    if (out.n_he >= n_bits || out.doublings >= max_doublings)
      throw ProtocolError("intersect_bits: empty intersection at n_he=" + std::to_string(out.n_he) +
                          " after " + std::to_string(out.doublings) + " doublings");
    out.n_he = std::min(2 * out.n_he, n_bits);
    ++out.doublings;
  }
}

std::string bin_key(const Fingerprint& fp, std::span<const std::size_t> global_bits) {
  std::string key(global_bits.size(), '0');
  for (std::size_t i = 0; i < global_bits.size(); ++i) {
    if (global_bits[i] >= fp.size()) throw std::invalid_argument("bin_key: bit index out of range");
    if (fp.test(global_bits[i])) key[i] = '1';
  }
  return key;
}

ClusterAssignment lsh_assign(const std::vector<MoleculeRecord>& records,
                             std::span<const std::size_t> global_bits, Method method) {
  std::vector<std::size_t> sorted(global_bits.begin(), global_bits.end());
  std::sort(sorted.begin(), sorted.end());
  ClusterAssignment out;
  out.method = method;
  out.provenance = "n_bits=" + std::to_string(sorted.size());
  std::unordered_map<std::string, int> label_of;
  out.labels.reserve(records.size());
  for (const auto& r : records) {
    auto key = bin_key(r.fingerprint, sorted);
    auto [it, inserted] = label_of.emplace(key, static_cast<int>(out.cluster_keys.size()));
    if (inserted) out.cluster_keys.push_back(std::move(key));
    out.labels.push_back(it->second);
  }
  return out;
}

LshProtocol::Message LshProtocol::client_round(const ClientShard& shard, const State& state,
                                               const ClientContext& ctx) const {
  if (shard.records.empty()) throw ProtocolError("fed_lsh: empty shard");
  const std::size_t F = shard.records.front().fingerprint.size();
  return Message{ctx.client_id, F, local_top_entropy_bits(shard.records, std::min(state.n_he, F))};
}

LshProtocol::State LshProtocol::aggregate(const State& state, std::span<const Message> messages,
                                          int) const {
  if (messages.empty()) throw ProtocolError("fed_lsh: no client messages");
  std::size_t F = messages.front().n_bits;
  std::vector<std::vector<std::size_t>> sets;
  for (const auto& m : messages) {
    if (m.n_bits != F) throw ProtocolError("fed_lsh: clients disagree on fingerprint length");
    sets.push_back(m.top_bits);
  }
  State next = state;
  next.global_bits = intersect_sets(sets);
  if (!next.global_bits.empty()) {
    next.done = true;
    return next;
  }
  if (state.n_he >= F || state.doublings >= max_doublings)
    throw ProtocolError("fed_lsh: empty intersection at n_he=" + std::to_string(state.n_he) +
                        " after " + std::to_string(state.doublings) + " doublings");
  next.n_he = std::min(2 * state.n_he, F);
  ++next.doublings;
  return next;
}

LshProtocol::Output LshProtocol::client_finalize(const ClientShard& shard, const State& state,
                                                 const ClientContext&) const {
  if (!state.done) throw ProtocolError("fed_lsh: no global bit set was agreed");
  auto out = lsh_assign(shard.records, state.global_bits, Method::fed_lsh);
  out.provenance = "n_he=" + std::to_string(n_he) + ";n_he_used=" + std::to_string(state.n_he) +
                   ";n_bits=" + std::to_string(state.global_bits.size());
  return out;
}

FedLshResult fed_lsh(std::span<const ClientShard> shards, const FedLshConfig& cfg) {
  if (shards.empty()) throw std::invalid_argument("fed_lsh: no shards");
  if (cfg.n_he < 1) throw std::invalid_argument("fed_lsh: n_he must be >= 1");
  if (cfg.max_doublings < 0) throw std::invalid_argument("fed_lsh: max_doublings must be >= 0");
  LshProtocol protocol{cfg.n_he, cfg.max_doublings};
  FederationConfig fcfg{static_cast<int>(shards.size()), cfg.max_doublings + 1, 0, cfg.parallel};
  auto run = run_federation(shards, protocol, fcfg);
  FedLshResult out;
  out.global_bits = std::move(run.server_state.global_bits);
  out.n_he_used = run.server_state.n_he;
  out.doublings = run.server_state.doublings;
  out.assignments = std::move(run.local_outputs);
  out.log = std::move(run.log);
  return out;
}

ClusterAssignment centralized_lsh(const std::vector<MoleculeRecord>& records, std::size_t n_he) {
  if (records.empty()) throw std::invalid_argument("centralized_lsh: no records");
  const std::size_t F = records.front().fingerprint.size();
  const auto bits = local_top_entropy_bits(records, std::min(n_he, F));
  auto out = lsh_assign(records, bits, Method::centralized_lsh);
  out.provenance = "n_he=" + std::to_string(n_he) + ";n_bits=" + std::to_string(bits.size());
  return out;
}

}  // namespace fedmol
