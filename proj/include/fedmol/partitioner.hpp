#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedmol/dataset.hpp"

namespace fedmol {

struct PartitionConfig {
  int n_clients = 5;
  double primary_fraction = 0.9;
  double dirichlet_alpha = 50.0;
  std::uint64_t seed = 0;
};

/// Balanced primary-client map over the unique scaffold keys: per-client
/// counts differ by at most one. Throws if n_clients < 2 or exceeds the
/// number of unique scaffolds.
std::map<std::string, int> assign_scaffolds(const std::vector<std::string>& scaffold_keys,
                                            int n_clients, std::uint64_t seed);

struct Partition {
  std::vector<ClientShard> shards;
  std::map<std::string, int> primary_client;
};

/// Soft scaffold split. Each scaffold draws a client-share vector from
/// Dirichlet(alpha * w) with w = primary_fraction on its primary client and
/// (1 - primary_fraction)/(N-1) elsewhere; its molecules are then assigned
/// by independent categorical draws. Shard records keep input order.
Partition partition_dataset(const std::vector<MoleculeRecord>& records, const PartitionConfig& cfg);

std::vector<ClientShard> soft_split(const std::vector<MoleculeRecord>& records,
                                    const PartitionConfig& cfg);

}  // namespace fedmol
