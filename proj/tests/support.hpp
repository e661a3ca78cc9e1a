#pragma once

#include <random>
#include <string>
#include <vector>

#include "fedmol/clustering.hpp"
#include "fedmol/dataset.hpp"
#include "oracles.hpp"

namespace testing {

inline oracle::Rows rows(const fedmol::Matrix& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

template <class M>
inline oracle::Rows rows_of(const M& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline fedmol::Matrix matrix(const oracle::Rows& r) {
  fedmol::Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.empty() ? 0 : r[0].size()));
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
  return m;
}

inline std::vector<std::vector<int>> bits(const std::vector<fedmol::MoleculeRecord>& recs) {
  std::vector<std::vector<int>> out;
  for (const auto& r : recs) {
    std::vector<int> row(r.fingerprint.size());
    for (std::size_t b = 0; b < row.size(); ++b) row[b] = r.fingerprint.test(b) ? 1 : 0;
    out.push_back(row);
  }
  return out;
}

inline fedmol::MoleculeRecord record(const std::string& id, const std::vector<int>& on, std::size_t n_bits,
                                     const std::string& scaffold, std::vector<fedmol::MetaValue> meta = {}) {
  fedmol::MoleculeRecord r;
  r.mol_id = id;
  r.fingerprint = fedmol::Fingerprint(n_bits);
  for (int b : on) r.fingerprint.set(static_cast<std::size_t>(b));
  r.scaffold = scaffold;
  r.metadata = std::move(meta);
  return r;
}

/// Random records: each bit set with probability `density`, scaffold drawn
/// from `n_scaffolds` keys.
inline std::vector<fedmol::MoleculeRecord> random_records(std::mt19937_64& rng, std::size_t n, std::size_t n_bits,
                                                          double density, int n_scaffolds,
                                                          const std::string& prefix = "m") {
  std::bernoulli_distribution bit(density);
  std::uniform_int_distribution<int> scaf(0, n_scaffolds - 1);
  std::vector<fedmol::MoleculeRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    fedmol::MoleculeRecord r;
    r.mol_id = prefix + std::to_string(i);
    r.fingerprint = fedmol::Fingerprint(n_bits);
    for (std::size_t b = 0; b < n_bits; ++b)
      if (bit(rng)) r.fingerprint.set(b);
    r.scaffold = "s" + std::to_string(scaf(rng));
    out.push_back(std::move(r));
  }
  return out;
}

inline fedmol::Matrix random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  fedmol::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
  return m;
}

}  // namespace testing
