#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedmol/clustering.hpp"
#include "fedmol/federation.hpp"

namespace fedmol {

/// Binary Shannon entropy in bits; H(0) = H(1) = 0.
double binary_entropy(std::size_t ones, std::size_t total);

/// Per-position entropy of the ones-fraction over the records.
std::vector<double> bit_entropies(const std::vector<MoleculeRecord>& records);

/// Indices (ascending) of the n_he highest-entropy positions; ties go to the lower index.
std::vector<std::size_t> top_entropy_bits(const std::vector<double>& entropies, std::size_t n_he);
std::vector<std::size_t> local_top_entropy_bits(const std::vector<MoleculeRecord>& records,
                                                std::size_t n_he);

/// Set intersection of ascending index lists.
std::vector<std::size_t> intersect_sets(std::span<const std::vector<std::size_t>> sets);

struct BitIntersection {
  std::vector<std::size_t> bits;  // ascending
  std::size_t n_he = 0;           // local set size that produced them
  int doublings = 0;
};

/// Callback asking every client for its top-n_he set.
using TopBitsQuery = std::function<std::vector<std::vector<std::size_t>>(std::size_t n_he)>;

/// Intersects the clients' top sets, doubling n_he (capped at n_bits) while
/// the intersection is empty. Throws ProtocolError when max_doublings is
/// exhausted without a non-empty intersection.
BitIntersection intersect_bits(const TopBitsQuery& query, std::size_t n_he_start, int max_doublings,
                               std::size_t n_bits);

/// Bin key: the record's values at `global_bits` as a '0'/'1' string.
std::string bin_key(const Fingerprint& fp, std::span<const std::size_t> global_bits);

/// Molecules with equal bin keys share a label; labels follow first
/// occurrence and cluster_keys hold the keys.
ClusterAssignment lsh_assign(const std::vector<MoleculeRecord>& records,
                             std::span<const std::size_t> global_bits, Method method = Method::fed_lsh);

struct FedLshConfig {
  std::size_t n_he = 32;
  int max_doublings = 5;
  bool parallel = false;
};

struct LshProtocol {
  using ClientData = ClientShard;
  struct Message {
    int client_id = 0;
    std::size_t n_bits = 0;
    std::vector<std::size_t> top_bits;
  };
  struct State {
    std::size_t n_he = 0;
    int doublings = 0;
    bool done = false;
    std::vector<std::size_t> global_bits;
  };
  using Output = ClusterAssignment;

  std::size_t n_he = 32;
  int max_doublings = 5;

  State init_server() const { return State{n_he, 0, false, {}}; }
  bool finished(const State& s) const { return s.done; }
  Message client_round(const ClientShard& shard, const State& state, const ClientContext& ctx) const;
  State aggregate(const State& state, std::span<const Message> messages, int round) const;
  Output client_finalize(const ClientShard& shard, const State& state, const ClientContext& ctx) const;
  std::size_t payload_size(const Message& m) const { return m.top_bits.size(); }
};

struct FedLshResult {
  std::vector<std::size_t> global_bits;
  std::size_t n_he_used = 0;
  int doublings = 0;
  std::vector<ClusterAssignment> assignments;  // one per client
  std::vector<MessageLogEntry> log;
};

FedLshResult fed_lsh(std::span<const ClientShard> shards, const FedLshConfig& cfg = {});

ClusterAssignment centralized_lsh(const std::vector<MoleculeRecord>& records, std::size_t n_he);

}  // namespace fedmol
