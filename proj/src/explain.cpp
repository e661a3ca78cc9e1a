#include "fedmol/explain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace fedmol {

std::vector<std::string> explanation_groups(const DatasetManifest& manifest) {
  std::vector<std::string> groups;
  if (!manifest.group_index("scaffold")) groups.emplace_back("scaffold");
  for (const auto& g : manifest.feature_groups) groups.push_back(g.name);
  return groups;
}

EncodedMetadata encode_metadata(const DatasetManifest& manifest,
                                const std::vector<MoleculeRecord>& records) {
  EncodedMetadata enc;
  enc.groups = explanation_groups(manifest);
  std::vector<std::vector<double>> columns;

  for (std::size_t g = 0; g < enc.groups.size(); ++g) {
    const auto& name = enc.groups[g];
    const auto idx = manifest.group_index(name);
    const bool numeric = idx && manifest.feature_groups[*idx].kind == FeatureKind::numeric;
    if (!numeric) {
      std::vector<MetaValue> values;
      for (const auto& r : records) values.push_back(idx ? r.metadata.at(*idx) : MetaValue(r.scaffold));
      std::set<std::string> distinct;
      bool any_na = false;
      for (const auto& v : values) {
        if (v)
          distinct.insert(*v);
        else
          any_na = true;
      }
      for (const auto& value : distinct) {
        std::vector<double> col;
        for (const auto& v : values) col.push_back(v && *v == value ? 1.0 : 0.0);
        columns.push_back(std::move(col));
        enc.column_names.push_back(name + "=" + value);
        enc.column_group.push_back(g);
      }
      if (any_na) {
        std::vector<double> col;
        for (const auto& v : values) col.push_back(v ? 0.0 : 1.0);
        columns.push_back(std::move(col));
        enc.column_names.push_back(name + "=NA");
        enc.column_group.push_back(g);
      }
      continue;
    }
    std::vector<std::optional<double>> parsed;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      parsed.push_back(parse_numeric(r.metadata.at(*idx)));
      if (parsed.back()) lo = std::min(lo, *parsed.back());
    }
    const bool any_na = std::any_of(parsed.begin(), parsed.end(), [](const auto& v) { return !v; });
    const double fill = std::isfinite(lo) ? lo - 1.0 : 0.0;
    std::vector<double> col;
    for (const auto& v : parsed) col.push_back(v.value_or(fill));
    columns.push_back(std::move(col));
    enc.column_names.push_back(name);
    enc.column_group.push_back(g);
    if (any_na) {
      std::vector<double> na;
      for (const auto& v : parsed) na.push_back(v ? 0.0 : 1.0);
      columns.push_back(std::move(na));
      enc.column_names.push_back(name + "=NA");
      enc.column_group.push_back(g);
    }
  }

  enc.design.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c)
    for (std::size_t i = 0; i < records.size(); ++i)
      enc.design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = columns[c][i];
  return enc;
}

FeatureGroupImportance rf_feature_group_importance(const DatasetManifest& manifest,
                                                   const std::vector<MoleculeRecord>& records,
                                                   const ClusterAssignment& assignment,
                                                   const RandomForestConfig& cfg) {
  if (records.size() != assignment.labels.size())
    throw std::invalid_argument("rf_feature_group_importance: labels/records size mismatch");
  std::map<int, std::size_t> sizes;
  for (int l : assignment.labels) ++sizes[l];
  if (sizes.size() < 2)
    throw std::invalid_argument("rf_feature_group_importance: need at least 2 clusters");
  const auto populated = std::count_if(sizes.begin(), sizes.end(), [](const auto& s) { return s.second >= 2; });
  if (populated < 2)
    throw std::invalid_argument("rf_feature_group_importance: need 2 clusters with >= 2 records");

  const auto enc = encode_metadata(manifest, records);
  std::vector<int> y;
  y.reserve(assignment.labels.size());
  {
    std::map<int, int> dense;
    for (const auto& [l, n] : sizes) dense.emplace(l, static_cast<int>(dense.size()));
    for (int l : assignment.labels) y.push_back(dense.at(l));
  }

  RandomForest forest;
  forest.fit(enc.design, y, cfg);
  const auto& col_imp = forest.feature_importances();
  FeatureGroupImportance out;
  for (const auto& g : enc.groups) out.emplace_back(g, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < col_imp.size(); ++c) {
    out[enc.column_group[c]].second += col_imp[c];
    total += col_imp[c];
  }
  if (total <= 0.0)
    throw std::domain_error("rf_feature_group_importance: no metadata column admits a split");
  for (auto& [g, v] : out) v /= total;
  return out;
}

FeatureGroupImportance ranked(FeatureGroupImportance importances) {
  std::stable_sort(importances.begin(), importances.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return importances;
}

std::vector<SharingStats> feature_sharing_statistics(const DatasetManifest& manifest,
                                                     const std::vector<MoleculeRecord>& records) {
  std::vector<SharingStats> out;
  if (records.empty()) return out;
  for (const auto& group : explanation_groups(manifest)) {
    const auto idx = manifest.group_index(group);
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) ++counts[idx ? r.metadata.at(*idx).value_or("NA") : r.scaffold];
    SharingStats st;
    st.group = group;
    st.unique_values = counts.size();
    st.min_sharing = records.size();
    for (const auto& [v, n] : counts) {
      st.min_sharing = std::min(st.min_sharing, n);
      st.max_sharing = std::max(st.max_sharing, n);
    }
    st.mean_sharing = static_cast<double>(records.size()) / static_cast<double>(counts.size());
    out.push_back(std::move(st));
  }
  return out;
}

Overclustering overclustering_flag(const ClusterAssignment& assignment,
                                   const DatasetManifest& manifest,
                                   const std::vector<MoleculeRecord>& records,
                                   const std::string& reference_group) {
  if (records.size() != assignment.labels.size())
    throw std::invalid_argument("overclustering_flag: labels/records size mismatch");
  if (records.empty()) throw std::invalid_argument("overclustering_flag: empty shard");
  const auto stats = cluster_statistics(assignment.labels);
  const auto values = feature_group_values(manifest, records, reference_group);
  const std::set<std::string> distinct(values.begin(), values.end());
  Overclustering out;
  out.mean_cluster_size = stats.mean_size;
  out.mean_group_sharing = static_cast<double>(records.size()) / static_cast<double>(distinct.size());
  out.ratio = out.mean_cluster_size / out.mean_group_sharing;
  out.flagged = stats.n_clusters > 1 && out.ratio < 1.0;
  return out;
}

}  // namespace fedmol
