#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fedmol/clustering.hpp"
#include "fedmol/metrics.hpp"
#include "fedmol/random_forest.hpp"

namespace fedmol {

/// Feature groups used for explanation: the declared metadata groups, with
/// a "scaffold" pseudo-group (from the record scaffolds) prepended when the
/// manifest does not declare one.
std::vector<std::string> explanation_groups(const DatasetManifest& manifest);

struct EncodedMetadata {
  Matrix design;                          // records x columns
  std::vector<std::string> column_names;  // "<group>=<value>", "<group>", "<group>=NA"
  std::vector<std::size_t> column_group;  // index into groups
  std::vector<std::string> groups;
};

/// Categorical groups are one-hot encoded in lexicographic value order with
/// a trailing NA column when any value is missing. Numeric groups pass
/// through as one column; missing values get (min - 1) plus an NA indicator.
EncodedMetadata encode_metadata(const DatasetManifest& manifest,
                                const std::vector<MoleculeRecord>& records);

/// Group importances in group order; non-negative and summing to 1.
using FeatureGroupImportance = std::vector<std::pair<std::string, double>>;

/// Trains a random forest to predict cluster labels from the encoded
/// metadata and sums its impurity importances per group. Requires at least
/// two clusters with two or more records each.
FeatureGroupImportance rf_feature_group_importance(const DatasetManifest& manifest,
                                                   const std::vector<MoleculeRecord>& records,
                                                   const ClusterAssignment& assignment,
                                                   const RandomForestConfig& cfg = {});

/// Stable descending order by importance.
FeatureGroupImportance ranked(FeatureGroupImportance importances);

struct SharingStats {
  std::string group;
  std::size_t unique_values = 0;
  double mean_sharing = 0.0;
  std::size_t min_sharing = 0;
  std::size_t max_sharing = 0;
};

/// How many molecules share each value of every group (NA is a value).
std::vector<SharingStats> feature_sharing_statistics(const DatasetManifest& manifest,
                                                     const std::vector<MoleculeRecord>& records);

struct Overclustering {
  bool flagged = false;
  double ratio = 0.0;  // mean cluster size / mean molecules per reference value
  double mean_cluster_size = 0.0;
  double mean_group_sharing = 0.0;
};

/// Flags a partition finer than the reference group (strictly smaller mean
/// cluster size). A single cluster is never flagged.
Overclustering overclustering_flag(const ClusterAssignment& assignment,
                                   const DatasetManifest& manifest,
                                   const std::vector<MoleculeRecord>& records,
                                   const std::string& reference_group = "scaffold");

}  // namespace fedmol
