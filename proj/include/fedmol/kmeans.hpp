#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedmol/clustering.hpp"
#include "fedmol/federation.hpp"

namespace fedmol {

struct CentroidModel {
  Matrix centroids;                 // k x d
  std::vector<std::size_t> counts;  // points behind each centroid

  int k() const noexcept { return static_cast<int>(centroids.rows()); }
  Eigen::Index dim() const noexcept { return centroids.cols(); }

  friend bool operator==(const CentroidModel& a, const CentroidModel& b) {
    return a.centroids.rows() == b.centroids.rows() && a.centroids.cols() == b.centroids.cols() &&
           a.centroids == b.centroids && a.counts == b.counts;
  }
};

/// k-means++ seeding: first centre uniform, the rest by D² sampling. When
/// every remaining point coincides with a chosen centre the next pick is
/// uniform over unchosen indices. Counts are zero.
CentroidModel kmeanspp_init(const Matrix& points, int k, std::uint64_t seed);

/// Index of the nearest centroid per point (Euclidean; ties to the lowest index).
std::vector<int> nearest_centroids(const Matrix& points, const Matrix& centroids);

/// Sum of squared distances to the nearest centroid.
double inertia(const Matrix& points, const Matrix& centroids);

/// A client's round message: local centroids and cluster counts.
struct KMeansUpdate {
  int client_id = 0;
  CentroidModel local;
};

/// One Lloyd step against the broadcast centroids. Centroids that attract
/// no point keep the broadcast value with count 0.
KMeansUpdate local_kmeans_step(const Matrix& points, const CentroidModel& global,
                               int client_id = 0, int local_iterations = 1);

/// Count-weighted average of the local centroids, folded in ascending
/// client id order. A centroid with zero total count keeps `previous`.
CentroidModel aggregate_centroids(std::span<const KMeansUpdate> messages,
                                  const CentroidModel& previous);

struct KMeansConfig {
  int k = 5;
  int rounds = 3;
  std::uint64_t seed = 0;
  int local_iterations = 1;
  bool parallel = false;
};

struct FedKMeansResult {
  CentroidModel model;
  std::vector<ClusterAssignment> assignments;  // one per client
  std::vector<CentroidModel> round_models;     // global model after each round
  std::vector<MessageLogEntry> log;
};

/// Protocol plugged into run_federation. Client 0 seeds the centroids with
/// k-means++ on its own shard.
struct KMeansProtocol {
  using ClientData = Matrix;
  using SetupMessage = std::optional<CentroidModel>;
  using Message = KMeansUpdate;
  using Output = std::vector<int>;

  struct State {
    CentroidModel model;
    std::vector<CentroidModel> history;
  };

  int k = 5;
  std::uint64_t init_seed = 0;
  int local_iterations = 1;

  SetupMessage client_setup(const Matrix& points, const ClientContext& ctx) const;
  State init_server(std::span<const SetupMessage> setup) const;
  Message client_round(const Matrix& points, const State& state, const ClientContext& ctx) const;
  State aggregate(const State& state, std::span<const Message> messages, int round) const;
  Output client_finalize(const Matrix& points, const State& state, const ClientContext& ctx) const;
  std::size_t payload_size(const Message& m) const;
};

FedKMeansResult fed_kmeans(std::span<const Matrix> shards, const KMeansConfig& cfg);

struct KMeansResult {
  CentroidModel model;
  ClusterAssignment assignment;
};

/// k-means++ then `iterations` Lloyd steps on pooled points.
KMeansResult centralized_kmeans(const Matrix& points, int k, int iterations, std::uint64_t seed);

}  // namespace fedmol
