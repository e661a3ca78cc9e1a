#pragma once

#include <cstddef>
#include <cstdint>

#include "fedmol/dataset.hpp"

namespace fedmol {

struct SyntheticSpec {
  std::size_t n_scaffolds = 20;
  std::size_t molecules_per_scaffold = 25;
  std::size_t bits_per_scaffold_core = 8;
  std::size_t noise_bits = 6;
  std::size_t fingerprint_bits = kDefaultFingerprintBits;
  std::uint64_t seed = 0;
};

/// Scaffold-blob dataset. Each scaffold's core is a random subset of a
/// shared core vocabulary of 4*core bit positions, so cores overlap by
/// about a quarter; every molecule adds `noise_bits` random non-core bits.
/// Metadata groups: scaffold, series (a function of the scaffold) and
/// batch (independent of it). Pure function of the spec.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace fedmol
