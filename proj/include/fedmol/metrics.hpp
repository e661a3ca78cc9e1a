#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedmol/clustering.hpp"

namespace fedmol {

/// nullopt marks a metric that is undefined for the input (for example a
/// single cluster); it is reported as missing, never as a number.
using MetricValue = std::optional<double>;

/// Dense symmetric pairwise distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) noexcept {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

DistanceMatrix euclidean_distances(const Matrix& points);
DistanceMatrix tanimoto_distances(const std::vector<MoleculeRecord>& records);

/// Mean silhouette; singleton clusters contribute 0. Undefined for fewer
/// than two clusters.
MetricValue silhouette(const DistanceMatrix& distances, std::span<const int> labels);

/// Between/within dispersion ratio. +inf when the within scatter is zero but
/// the between scatter is not; undefined for one cluster or identical points.
MetricValue calinski_harabasz(const Matrix& points, std::span<const int> labels);

/// Mean over clusters of the worst (σi+σj)/d(μi,μj). Coincident centroids
/// contribute 0, as in scikit-learn. Undefined for one cluster.
MetricValue davies_bouldin(const Matrix& points, std::span<const int> labels);

// SF / ICF family over one categorical value per record (a scaffold key or
// any metadata group value).

/// Fraction of cluster `cluster` carrying `value`; 0 if the value is absent.
double scaffold_frequency(std::span<const std::string> values, std::span<const int> labels,
                          const std::string& value, int cluster);

/// log(|C| / #clusters containing value) / log(|C|); 0 when |C| = 1.
double inverse_cluster_frequency(std::span<const std::string> values, std::span<const int> labels,
                                 const std::string& value);

/// Σ_j |c_j|/N Σ_{distinct s in c_j} SF(s, c_j) ICF(s, C). Throws on empty input.
double sf_icf(std::span<const std::string> values, std::span<const int> labels);

/// Unweighted inner sum per cluster, keyed by label.
std::map<int, double> per_cluster_sf_icf(std::span<const std::string> values,
                                         std::span<const int> labels);

std::vector<std::string> scaffolds_of(const std::vector<MoleculeRecord>& records);
double sf_icf(const std::vector<MoleculeRecord>& records, std::span<const int> labels);

/// Categorical view of a feature group: the raw values, "NA" for missing;
/// numeric groups become on-client deciles "d0".."d9". The pseudo-group
/// "scaffold" falls back to the record scaffolds when not declared.
std::vector<std::string> feature_group_values(const DatasetManifest& manifest,
                                              const std::vector<MoleculeRecord>& records,
                                              const std::string& group);

/// SF-ICF with the scaffold replaced by a feature group's value.
double x_f_icf(const DatasetManifest& manifest, const std::vector<MoleculeRecord>& records,
               std::span<const int> labels, const std::string& group);

/// D_KL(P(S|c) || P(S)) in nats, P(S) over all given records.
double scaffold_kld(std::span<const std::string> scaffolds, std::span<const int> labels, int cluster);
std::map<int, double> per_cluster_kld(std::span<const std::string> scaffolds,
                                      std::span<const int> labels);

/// Uniform i.i.d. labels in [0, n_clusters), densified.
ClusterAssignment random_assignment(std::size_t n_records, int n_clusters, std::uint64_t seed);

struct ClusterStats {
  int n_clusters = 0;
  std::size_t min_size = 0;
  std::size_t max_size = 0;
  double mean_size = 0.0;

  friend bool operator==(const ClusterStats&, const ClusterStats&) = default;
};

ClusterStats cluster_statistics(std::span<const int> labels);

enum class FeatureSpace { raw, pca_projected };

struct MetricsReport {
  MetricValue silhouette_euclidean;
  MetricValue davies_bouldin;
  MetricValue calinski_harabasz;
  MetricValue silhouette_tanimoto;
  MetricValue sf_icf;
  std::vector<std::pair<std::string, MetricValue>> per_feature_group_ficf;
  ClusterStats cluster_stats;
  FeatureSpace feature_space = FeatureSpace::raw;
};

/// All metrics for one client. Euclidean metrics run on `feature_points`
/// (the space the clustering used); the Tanimoto silhouette always uses the
/// raw fingerprints.
MetricsReport evaluate(const DatasetManifest& manifest, const std::vector<MoleculeRecord>& records,
                       const ClusterAssignment& assignment, const Matrix& feature_points,
                       FeatureSpace space);

/// Scalar metric names in report order.
const std::vector<std::string>& metric_names();

/// Named scalar from a report: the five metrics, "n_clusters",
/// "mean_cluster_size", or "ficf:<group>".
MetricValue metric_value(const MetricsReport& report, const std::string& name);

/// Unweighted mean over the clients that define the metric.
MetricValue mean_metric(std::span<const MetricsReport> reports, const std::string& name);

}  // namespace fedmol
