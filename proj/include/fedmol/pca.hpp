#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedmol/clustering.hpp"
#include "fedmol/federation.hpp"
#include "fedmol/kmeans.hpp"

namespace fedmol {

/// Mergeable first and second moments: sum x, sum x xᵀ and the count.
struct CovarianceAccumulator {
  Vector sum_x;
  Eigen::MatrixXd sum_outer;
  std::size_t count = 0;

  CovarianceAccumulator() = default;
  explicit CovarianceAccumulator(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return sum_x.size(); }
  void add(const Fingerprint& fp);
  CovarianceAccumulator& operator+=(const CovarianceAccumulator& other);
};

CovarianceAccumulator local_covariance_partials(const std::vector<MoleculeRecord>& records);
CovarianceAccumulator local_covariance_partials(const Matrix& points);
inline CovarianceAccumulator local_covariance_partials(const ClientShard& shard) {
  return local_covariance_partials(shard.records);
}

/// Unnormalised scatter matrix around the global mean,
/// C = Σ x xᵀ − (Σ x)(Σ x)ᵀ / M, symmetrised. Requires M ≥ 2.
Eigen::MatrixXd assemble_covariance(std::span<const CovarianceAccumulator> partials);

/// Global mean Σ x / M from the partials.
Vector pooled_mean(std::span<const CovarianceAccumulator> partials);

struct ProjectionMatrix {
  Matrix components;                      // p x F, orthonormal rows
  Vector eigenvalues;                     // p, descending, clamped at 0
  Vector mean;                            // F
  std::optional<double> next_eigenvalue;  // (p+1)-th eigenvalue when p < F

  int p() const noexcept { return static_cast<int>(components.rows()); }
  /// Gap between the p-th and (p+1)-th eigenvalues; nullopt when p == F.
  std::optional<double> eigengap() const;
};

/// Top-p eigenpairs of a symmetric matrix. Each component is signed so its
/// largest-magnitude entry (first such on ties) is positive.
ProjectionMatrix pca_from_covariance(const Eigen::MatrixXd& covariance, const Vector& mean, int p);

/// y = P (x − mean) per row, order preserving.
Matrix project(const Matrix& points, const ProjectionMatrix& proj);
Matrix project(const std::vector<MoleculeRecord>& records, const ProjectionMatrix& proj);
inline Matrix project(const ClientShard& shard, const ProjectionMatrix& proj) {
  return project(shard.records, proj);
}

template <class Data>
struct PcaProtocol {
  using ClientData = Data;
  struct Message {
    int client_id = 0;
    CovarianceAccumulator partials;
  };
  using State = std::optional<ProjectionMatrix>;
  using Output = Matrix;

  int p = 5;

  State init_server() const { return std::nullopt; }
  Message client_round(const Data& data, const State&, const ClientContext& ctx) const {
    return Message{ctx.client_id, local_covariance_partials(data)};
  }
  State aggregate(const State&, std::span<const Message> messages, int) const {
    std::vector<CovarianceAccumulator> partials;
    partials.reserve(messages.size());
    for (const auto& m : messages) partials.push_back(m.partials);
    return pca_from_covariance(assemble_covariance(partials), pooled_mean(partials), p);
  }
  Output client_finalize(const Data& data, const State& state, const ClientContext&) const {
    if (!state) throw ProtocolError("fed_pca: no projection was broadcast");
    return project(data, *state);
  }
  std::size_t payload_size(const Message& m) const {
    return static_cast<std::size_t>(m.partials.sum_x.size() + m.partials.sum_outer.size()) + 1;
  }
};

struct FedPcaResult {
  ProjectionMatrix projection;
  std::vector<Matrix> projected;  // one per client
  std::vector<MessageLogEntry> log;
};

FedPcaResult fed_pca(std::span<const ClientShard> shards, int p);
FedPcaResult fed_pca(std::span<const Matrix> shards, int p);

/// Pooled (non-federated) PCA with an explicit two-pass mean.
ProjectionMatrix centralized_pca(const Matrix& points, int p);
ProjectionMatrix centralized_pca(const std::vector<MoleculeRecord>& records, int p);

struct FedPcaKMeansResult {
  ProjectionMatrix projection;
  std::vector<Matrix> projected;
  FedKMeansResult kmeans;
};

FedPcaKMeansResult fed_pca_kmeans(std::span<const ClientShard> shards, int p, const KMeansConfig& cfg);
FedPcaKMeansResult fed_pca_kmeans(std::span<const Matrix> shards, int p, const KMeansConfig& cfg);

}  // namespace fedmol
