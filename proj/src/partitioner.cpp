#include "fedmol/partitioner.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "fedmol/rng.hpp"

namespace fedmol {

namespace {

// Round-robin over a seeded shuffle of the sorted unique keys. Works for any
// number of scaffolds; the public wrapper adds the coverage check.
std::map<std::string, int> balanced_primary(const std::vector<std::string>& keys, int n_clients,
                                            std::uint64_t seed) {
  const std::set<std::string> unique(keys.begin(), keys.end());
  std::vector<std::string> order(unique.begin(), unique.end());
  Rng rng(derive_seed(seed, {0xa551'9e5ULL}));
  std::shuffle(order.begin(), order.end(), rng);
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    out.emplace(order[i], static_cast<int>(i % static_cast<std::size_t>(n_clients)));
  return out;
}

std::vector<double> draw_split(const PartitionConfig& cfg, int primary, Rng& rng) {
  const auto n = static_cast<std::size_t>(cfg.n_clients);
  std::vector<double> share(n, 0.0);
  if (cfg.primary_fraction >= 1.0) {
    share[static_cast<std::size_t>(primary)] = 1.0;
    return share;
  }
  const double other = (1.0 - cfg.primary_fraction) / static_cast<double>(n - 1);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double w = static_cast<int>(c) == primary ? cfg.primary_fraction : other;
    std::gamma_distribution<double> gamma(cfg.dirichlet_alpha * w, 1.0);
    share[c] = gamma(rng);
    total += share[c];
  }
  if (total <= 0.0) {
    // Every gamma draw underflowed; fall back to the mean split.
    for (std::size_t c = 0; c < n; ++c)
      share[c] = static_cast<int>(c) == primary ? cfg.primary_fraction : other;
    return share;
  }
  for (auto& s : share) s /= total;
  return share;
}

void validate(const PartitionConfig& cfg) {
  if (cfg.n_clients < 2) throw std::invalid_argument("partition: n_clients must be >= 2");
  if (!(cfg.primary_fraction > 0.0 && cfg.primary_fraction <= 1.0))
    throw std::invalid_argument("partition: primary_fraction must be in (0, 1]");
  if (!(cfg.dirichlet_alpha > 0.0))
    throw std::invalid_argument("partition: dirichlet_alpha must be > 0");
}

}  // namespace

std::map<std::string, int> assign_scaffolds(const std::vector<std::string>& scaffold_keys,
                                            int n_clients, std::uint64_t seed) {
  if (n_clients < 2) throw std::invalid_argument("assign_scaffolds: n_clients must be >= 2");
  if (scaffold_keys.empty()) throw std::invalid_argument("assign_scaffolds: no scaffolds");
  const std::set<std::string> unique(scaffold_keys.begin(), scaffold_keys.end());
  if (static_cast<std::size_t>(n_clients) > unique.size())
    throw std::invalid_argument("assign_scaffolds: more clients (" + std::to_string(n_clients) +
                                ") than unique scaffolds (" + std::to_string(unique.size()) + ")");
  return balanced_primary(scaffold_keys, n_clients, seed);
}

Partition partition_dataset(const std::vector<MoleculeRecord>& records, const PartitionConfig& cfg) {
  validate(cfg);
  if (records.size() < static_cast<std::size_t>(cfg.n_clients))
    throw std::invalid_argument("partition: fewer records (" + std::to_string(records.size()) +
                                ") than clients (" + std::to_string(cfg.n_clients) + ")");

  std::vector<std::string> keys;
  keys.reserve(records.size());
  for (const auto& r : records) keys.push_back(r.scaffold);

  Partition part;
  part.primary_client = balanced_primary(keys, cfg.n_clients, cfg.seed);

  // Per-scaffold streams make the draw independent of record interleaving.
  std::map<std::string, std::pair<Rng, std::discrete_distribution<int>>> samplers;
  for (const auto& [scaffold, primary] : part.primary_client) {
    Rng rng(derive_seed(cfg.seed, scaffold));
    auto share = draw_split(cfg, primary, rng);
    samplers.emplace(scaffold, std::make_pair(std::move(rng), std::discrete_distribution<int>(
                                                                   share.begin(), share.end())));
  }

  std::vector<int> owner(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& [rng, dist] = samplers.at(records[i].scaffold);
    owner[i] = dist(rng);
  }

  std::vector<std::size_t> sizes(static_cast<std::size_t>(cfg.n_clients), 0);
  for (int o : owner) ++sizes[static_cast<std::size_t>(o)];
  for (std::size_t empty = 0; empty < sizes.size(); ++empty) {
    if (sizes[empty] != 0) continue;
    const auto largest = static_cast<int>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::size_t pick = records.size();
    for (std::size_t i = 0; i < records.size(); ++i)
      if (owner[i] == largest && (pick == records.size() || records[i].mol_id < records[pick].mol_id))
        pick = i;
    owner[pick] = static_cast<int>(empty);
    --sizes[static_cast<std::size_t>(largest)];
    ++sizes[empty];
  }

  part.shards.resize(sizes.size());
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    part.shards[c].client_id = static_cast<int>(c);
    part.shards[c].records.reserve(sizes[c]);
  }
  for (std::size_t i = 0; i < records.size(); ++i)
    part.shards[static_cast<std::size_t>(owner[i])].records.push_back(records[i]);
  return part;
}

std::vector<ClientShard> soft_split(const std::vector<MoleculeRecord>& records,
                                    const PartitionConfig& cfg) {
  return partition_dataset(records, cfg).shards;
}

}  // namespace fedmol
