#include "fedmol/fingerprint.hpp"

#include <stdexcept>

namespace fedmol {

Fingerprint::Fingerprint(std::size_t n_bits)
    : n_bits_(n_bits), words_((n_bits + 63) / 64, 0) {}

std::size_t Fingerprint::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::size_t> Fingerprint::on_bits() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t word = words_[w];
    while (word) {
      out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(word)));
      word &= word - 1;
    }
  }
  return out;
}

std::string Fingerprint::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(n_bits_ / 4, '0');
  for (std::size_t h = 0; h < out.size(); ++h) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) nibble = (nibble << 1) | (test(4 * h + b) ? 1u : 0u);
    out[h] = digits[nibble];
  }
  return out;
}

Fingerprint Fingerprint::from_hex(std::string_view hex, std::size_t n_bits) {
  if (n_bits % 4 != 0) throw std::invalid_argument("fingerprint length must be a multiple of 4");
  if (hex.size() != n_bits / 4)
    throw std::invalid_argument("wrong hex length: expected " + std::to_string(n_bits / 4) +
                                ", got " + std::to_string(hex.size()));
  Fingerprint fp(n_bits);
  for (std::size_t h = 0; h < hex.size(); ++h) {
    const char c = hex[h];
    unsigned nibble;
    if (c >= '0' && c <= '9')
      nibble = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f')
      nibble = static_cast<unsigned>(c - 'a' + 10);
    else
      throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
    for (std::size_t b = 0; b < 4; ++b)
      if (nibble & (8u >> b)) fp.set(4 * h + b);
  }
  return fp;
}

double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.size() != b.size()) throw std::invalid_argument("tanimoto_distance: length mismatch");
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    inter += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    uni += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace fedmol
