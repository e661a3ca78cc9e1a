#include "fedmol/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "fedmol/rng.hpp"

namespace fedmol {

namespace {

std::string padded(const char* prefix, std::size_t value, std::size_t width) {
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::size_t width_for(std::size_t n) { return std::to_string(n > 0 ? n - 1 : 0).size(); }

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t F = spec.fingerprint_bits;
  const std::size_t core = spec.bits_per_scaffold_core;
  if (spec.n_scaffolds < 1) throw std::invalid_argument("generate_synthetic: n_scaffolds must be >= 1");
  if (spec.molecules_per_scaffold < 1)
    throw std::invalid_argument("generate_synthetic: molecules_per_scaffold must be >= 1");
  if (F == 0 || F % 4 != 0)
    throw std::invalid_argument("generate_synthetic: F must be a positive multiple of 4");
  if (core + spec.noise_bits > F)
    throw std::invalid_argument("generate_synthetic: core + noise bits exceed F");

  Rng rng(derive_seed(spec.seed, {0x5ca7f01dULL}));

  std::vector<std::size_t> positions(F);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  std::shuffle(positions.begin(), positions.end(), rng);
  const std::size_t vocab_size = std::min(F, 4 * core);
  const std::vector<std::size_t> vocab(positions.begin(), positions.begin() + vocab_size);

  // Distinct core patterns where the vocabulary allows it.
  std::vector<std::vector<std::size_t>> cores;
  std::set<std::vector<std::size_t>> used;
  for (std::size_t s = 0; s < spec.n_scaffolds; ++s) {
    std::vector<std::size_t> pattern;
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::vector<std::size_t> pool = vocab;
      std::shuffle(pool.begin(), pool.end(), rng);
      pattern.assign(pool.begin(), pool.begin() + core);
      std::sort(pattern.begin(), pattern.end());
      if (used.insert(pattern).second) break;
    }
    cores.push_back(std::move(pattern));
  }

  Dataset ds;
  ds.manifest.name = "synthetic";
  ds.manifest.fingerprint_bits = F;
  ds.manifest.feature_groups = {{"scaffold", FeatureKind::categorical},
                                {"series", FeatureKind::categorical},
                                {"batch", FeatureKind::categorical}};

  const std::size_t n_series = std::max<std::size_t>(1, spec.n_scaffolds / 4);
  const std::size_t scaffold_width = width_for(spec.n_scaffolds);
  const std::size_t total = spec.n_scaffolds * spec.molecules_per_scaffold;
  const std::size_t mol_width = std::max<std::size_t>(6, width_for(total));
  std::uniform_int_distribution<int> batch_dist(0, 3);

  std::vector<char> in_core(F, 0);
  std::vector<std::size_t> candidates;
  candidates.reserve(F);
  for (std::size_t s = 0; s < spec.n_scaffolds; ++s) {
    const std::string scaffold = padded("scaf_", s, scaffold_width);
    const std::string series = padded("series_", s % n_series, width_for(n_series));
    std::fill(in_core.begin(), in_core.end(), 0);
    for (auto b : cores[s]) in_core[b] = 1;
    candidates.clear();
    for (std::size_t b = 0; b < F; ++b)
      if (!in_core[b]) candidates.push_back(b);

    for (std::size_t m = 0; m < spec.molecules_per_scaffold; ++m) {
      MoleculeRecord rec;
      rec.mol_id = padded("mol_", ds.records.size(), mol_width);
      rec.scaffold = scaffold;
      rec.fingerprint = Fingerprint(F);
      for (auto b : cores[s]) rec.fingerprint.set(b);
      // Partial Fisher-Yates over the non-core positions.
      for (std::size_t i = 0; i < spec.noise_bits; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
        rec.fingerprint.set(candidates[i]);
      }
      rec.metadata = {scaffold, series, "batch_" + std::to_string(batch_dist(rng))};
      ds.records.push_back(std::move(rec));
    }
  }
  ds.manifest.record_count = ds.records.size();
  return ds;
}

}  // namespace fedmol
