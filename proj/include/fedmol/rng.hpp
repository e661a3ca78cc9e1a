#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace fedmol {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Mixes a base seed with any number of stream identifiers (client id,
/// round, tree index, ...). Independent of evaluation order, so serial and
/// parallel schedules draw identical streams.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
  return derive_seed(base, {fnv1a64(key)});
}

}  // namespace fedmol
