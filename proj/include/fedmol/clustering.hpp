#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedmol/dataset.hpp"

namespace fedmol {

/// Points as rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Method {
  fed_kmeans,
  fed_pca_kmeans,
  fed_lsh,
  centralized_kmeans,
  centralized_pca_kmeans,
  centralized_lsh,
  random,
};

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Per-record cluster labels, dense from 0 within the assignment.
/// `cluster_keys[label]` is the label's cross-client identity (global
/// centroid index, LSH bin key, ...) when one exists.
struct ClusterAssignment {
  std::vector<int> labels;
  Method method = Method::random;
  std::string provenance;
  std::vector<std::string> cluster_keys;

  int n_clusters() const;
  std::size_t size() const noexcept { return labels.size(); }

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

/// Densifies arbitrary integer ids: labels are assigned in ascending id
/// order and cluster_keys record the original ids.
ClusterAssignment assignment_from_ids(const std::vector<int>& ids, Method method,
                                      std::string provenance = {});

/// Fingerprints as {0,1} real rows.
Matrix to_points(const std::vector<MoleculeRecord>& records);

/// Same partition of the records (labels equal up to renaming).
bool same_partition(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace fedmol
