#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedmol {

/// Fixed-length binary fingerprint. Bit 0 is the most significant bit of
/// the first hex character in the canonical text form.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(std::size_t n_bits);

  std::size_t size() const noexcept { return n_bits_; }
  bool test(std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(std::size_t i, bool value = true) noexcept {
    const std::uint64_t mask = 1ULL << (i & 63);
    if (value)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  std::size_t popcount() const noexcept;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Indices of set bits in ascending order.
  std::vector<std::size_t> on_bits() const;

  /// Lowercase hex, size()/4 characters.
  std::string to_hex() const;

  /// Throws std::invalid_argument on a length mismatch or a non-hex digit.
  static Fingerprint from_hex(std::string_view hex, std::size_t n_bits);

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  std::size_t n_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

/// 1 - |A∩B| / |A∪B|; 0 when both fingerprints are empty.
double tanimoto_distance(const Fingerprint& a, const Fingerprint& b);

}  // namespace fedmol
