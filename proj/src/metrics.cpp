#include "fedmol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "fedmol/rng.hpp"

namespace fedmol {

namespace {

// Dense relabelling in ascending label order.
struct Clusters {
  std::vector<int> of;                  // dense label per record
  std::vector<std::vector<std::size_t>> members;

  explicit Clusters(std::span<const int> labels) {
    const std::set<int> distinct(labels.begin(), labels.end());
    std::unordered_map<int, int> dense;
    for (int l : distinct) dense.emplace(l, static_cast<int>(dense.size()));
    members.resize(distinct.size());
    of.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int d = dense.at(labels[i]);
      of.push_back(d);
      members[static_cast<std::size_t>(d)].push_back(i);
    }
  }
  std::size_t count() const noexcept { return members.size(); }
};

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": labels/records size mismatch");
}

Matrix centroids_of(const Matrix& points, const Clusters& cl) {
  Matrix mu = Matrix::Zero(static_cast<Eigen::Index>(cl.count()), points.cols());
  for (std::size_t c = 0; c < cl.count(); ++c) {
    for (auto i : cl.members[c]) mu.row(static_cast<Eigen::Index>(c)) += points.row(static_cast<Eigen::Index>(i));
    mu.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(cl.members[c].size());
  }
  return mu;
}

}  // namespace

DistanceMatrix euclidean_distances(const Matrix& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d.set(i, j, (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm());
  return d;
}

DistanceMatrix tanimoto_distances(const std::vector<MoleculeRecord>& records) {
  DistanceMatrix d(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = i + 1; j < records.size(); ++j)
      d.set(i, j, tanimoto_distance(records[i].fingerprint, records[j].fingerprint));
  return d;
}

MetricValue silhouette(const DistanceMatrix& distances, std::span<const int> labels) {
  check_sizes(distances.size(), labels.size(), "silhouette");
  const Clusters cl(labels);
  if (cl.count() < 2) return std::nullopt;
  const std::size_t n = labels.size();
  double total = 0.0;
  std::vector<double> sums(cl.count());
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(cl.of[i]);
    if (cl.members[own].size() == 1) continue;  // singleton: s = 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[static_cast<std::size_t>(cl.of[j])] += distances(i, j);
    const double a = sums[own] / static_cast<double>(cl.members[own].size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cl.count(); ++c)
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(cl.members[c].size()));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

MetricValue calinski_harabasz(const Matrix& points, std::span<const int> labels) {
  check_sizes(static_cast<std::size_t>(points.rows()), labels.size(), "calinski_harabasz");
  const Clusters cl(labels);
  const auto k = cl.count();
  const auto m = labels.size();
  if (k < 2) return std::nullopt;
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Matrix mu = centroids_of(points, cl);
  double between = 0.0, within = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    between += static_cast<double>(cl.members[c].size()) * (mu.row(static_cast<Eigen::Index>(c)) - mean).squaredNorm();
    for (auto i : cl.members[c])
      within += (points.row(static_cast<Eigen::Index>(i)) - mu.row(static_cast<Eigen::Index>(c))).squaredNorm();
  }
  if (within == 0.0) {
    if (between == 0.0) return std::nullopt;
    return std::numeric_limits<double>::infinity();
  }
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(m - k));
}

MetricValue davies_bouldin(const Matrix& points, std::span<const int> labels) {
  check_sizes(static_cast<std::size_t>(points.rows()), labels.size(), "davies_bouldin");
  const Clusters cl(labels);
  const auto k = cl.count();
  if (k < 2) return std::nullopt;
  const Matrix mu = centroids_of(points, cl);
  std::vector<double> sigma(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (auto i : cl.members[c])
      sigma[c] += (points.row(static_cast<Eigen::Index>(i)) - mu.row(static_cast<Eigen::Index>(c))).norm();
    sigma[c] /= static_cast<double>(cl.members[c].size());
  }
  bool all_sigma_zero = std::all_of(sigma.begin(), sigma.end(), [](double s) { return s == 0.0; });
  bool all_centroids_equal = true;
  for (std::size_t c = 1; c < k; ++c)
    if (mu.row(static_cast<Eigen::Index>(c)) != mu.row(0)) all_centroids_equal = false;
  if (all_sigma_zero || all_centroids_equal) return 0.0;

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = (mu.row(static_cast<Eigen::Index>(i)) - mu.row(static_cast<Eigen::Index>(j))).norm();
      if (d == 0.0) continue;
      worst = std::max(worst, (sigma[i] + sigma[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

double scaffold_frequency(std::span<const std::string> values, std::span<const int> labels,
                          const std::string& value, int cluster) {
  check_sizes(values.size(), labels.size(), "scaffold_frequency");
  std::size_t size = 0, hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != cluster) continue;
    ++size;
    if (values[i] == value) ++hits;
  }
  if (size == 0) throw std::invalid_argument("scaffold_frequency: empty cluster");
  return static_cast<double>(hits) / static_cast<double>(size);
}

double inverse_cluster_frequency(std::span<const std::string> values, std::span<const int> labels,
                                 const std::string& value) {
  check_sizes(values.size(), labels.size(), "inverse_cluster_frequency");
  std::set<int> all, containing;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    all.insert(labels[i]);
    if (values[i] == value) containing.insert(labels[i]);
  }
  if (containing.empty()) throw std::invalid_argument("inverse_cluster_frequency: value absent");
  if (all.size() <= 1) return 0.0;
  const double c = static_cast<double>(all.size());
  return std::log(c / static_cast<double>(containing.size())) / std::log(c);
}

namespace {

struct FrequencyTable {
  Clusters clusters;
  std::vector<std::map<std::string, std::size_t>> counts;  // per dense cluster
  std::unordered_map<std::string, std::size_t> cluster_presence;

  FrequencyTable(std::span<const std::string> values, std::span<const int> labels)
      : clusters(labels), counts(clusters.count()) {
    for (std::size_t i = 0; i < values.size(); ++i)
      ++counts[static_cast<std::size_t>(clusters.of[i])][values[i]];
    for (const auto& table : counts)
      for (const auto& [v, n] : table) ++cluster_presence[v];
  }

  double icf(const std::string& v) const {
    const auto c = static_cast<double>(clusters.count());
    if (clusters.count() <= 1) return 0.0;
    return std::log(c / static_cast<double>(cluster_presence.at(v))) / std::log(c);
  }

  // Σ_s n_{s,c} ICF(s); dividing once keeps pure and worked cases exact.
  double weighted(std::size_t cluster) const {
    double s = 0.0;
    for (const auto& [v, n] : counts[cluster]) s += static_cast<double>(n) * icf(v);
    return s;
  }

  double inner(std::size_t cluster) const {
    return weighted(cluster) / static_cast<double>(clusters.members[cluster].size());
  }
};

}  // namespace

double sf_icf(std::span<const std::string> values, std::span<const int> labels) {
  check_sizes(values.size(), labels.size(), "sf_icf");
  if (values.empty()) throw std::invalid_argument("sf_icf: empty input");
  const FrequencyTable table(values, labels);
  double score = 0.0;
  for (std::size_t c = 0; c < table.clusters.count(); ++c) score += table.weighted(c);
  return score / static_cast<double>(values.size());
}

std::map<int, double> per_cluster_sf_icf(std::span<const std::string> values,
                                         std::span<const int> labels) {
  check_sizes(values.size(), labels.size(), "per_cluster_sf_icf");
  std::map<int, double> out;
  if (values.empty()) return out;
  const FrequencyTable table(values, labels);
  for (std::size_t c = 0; c < table.clusters.count(); ++c)
    out.emplace(labels[table.clusters.members[c].front()], table.inner(c));
  return out;
}

std::vector<std::string> scaffolds_of(const std::vector<MoleculeRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.scaffold);
  return out;
}

double sf_icf(const std::vector<MoleculeRecord>& records, std::span<const int> labels) {
  const auto s = scaffolds_of(records);
  return sf_icf(std::span<const std::string>(s), labels);
}

std::vector<std::string> feature_group_values(const DatasetManifest& manifest,
                                              const std::vector<MoleculeRecord>& records,
                                              const std::string& group) {
  const auto idx = manifest.group_index(group);
  if (!idx) {
    if (group == "scaffold") return scaffolds_of(records);
    throw std::invalid_argument("unknown feature group '" + group + "'");
  }
  std::vector<std::string> out;
  out.reserve(records.size());
  if (manifest.feature_groups[*idx].kind == FeatureKind::categorical) {
    for (const auto& r : records) out.push_back(r.metadata.at(*idx).value_or("NA"));
    return out;
  }
  std::vector<double> sorted;
  std::vector<std::optional<double>> parsed;
  for (const auto& r : records) {
    parsed.push_back(parse_numeric(r.metadata.at(*idx)));
    if (parsed.back()) sorted.push_back(*parsed.back());
  }
  std::sort(sorted.begin(), sorted.end());
  for (const auto& v : parsed) {
    if (!v) {
      out.emplace_back("NA");
      continue;
    }
    const auto rank = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), *v) - sorted.begin());
    const auto decile = std::min<std::size_t>(9, rank * 10 / sorted.size());
    out.push_back("d" + std::to_string(decile));
  }
  return out;
}

double x_f_icf(const DatasetManifest& manifest, const std::vector<MoleculeRecord>& records,
               std::span<const int> labels, const std::string& group) {
  const auto v = feature_group_values(manifest, records, group);
  return sf_icf(std::span<const std::string>(v), labels);
}

namespace {

std::map<int, double> kld_by_cluster(std::span<const std::string> scaffolds, std::span<const int> labels) {
  check_sizes(scaffolds.size(), labels.size(), "scaffold_kld");
  if (scaffolds.empty()) throw std::invalid_argument("scaffold_kld: empty input");
  std::unordered_map<std::string, std::size_t> global;
  for (const auto& s : scaffolds) ++global[s];
  const Clusters cl(labels);
  const auto n = static_cast<double>(scaffolds.size());
  std::map<int, double> out;
  for (std::size_t c = 0; c < cl.count(); ++c) {
    std::map<std::string, std::size_t> local;
    for (auto i : cl.members[c]) ++local[scaffolds[i]];
    const auto size = static_cast<double>(cl.members[c].size());
    double kld = 0.0;
    for (const auto& [s, cnt] : local) {
      const double p_c = static_cast<double>(cnt) / size;
      const double p = static_cast<double>(global.at(s)) / n;
      kld += p_c * std::log(p_c / p);
    }
    out.emplace(labels[cl.members[c].front()], std::max(0.0, kld));
  }
  return out;
}

}  // namespace

double scaffold_kld(std::span<const std::string> scaffolds, std::span<const int> labels, int cluster) {
  const auto all = kld_by_cluster(scaffolds, labels);
  const auto it = all.find(cluster);
  if (it == all.end()) throw std::invalid_argument("scaffold_kld: no such cluster");
  return it->second;
}

std::map<int, double> per_cluster_kld(std::span<const std::string> scaffolds,
                                      std::span<const int> labels) {
  return kld_by_cluster(scaffolds, labels);
}

ClusterAssignment random_assignment(std::size_t n_records, int n_clusters, std::uint64_t seed) {
  if (n_clusters < 1) throw std::invalid_argument("random_assignment: n_clusters must be >= 1");
  Rng rng(derive_seed(seed, {0x7a2d0ULL}));
  std::uniform_int_distribution<int> pick(0, n_clusters - 1);
  std::vector<int> ids(n_records);
  for (auto& id : ids) id = pick(rng);
  return assignment_from_ids(ids, Method::random,
                             "n_clusters=" + std::to_string(n_clusters) + ";seed=" + std::to_string(seed));
}

ClusterStats cluster_statistics(std::span<const int> labels) {
  ClusterStats st;
  if (labels.empty()) return st;
  const Clusters cl(labels);
  st.n_clusters = static_cast<int>(cl.count());
  st.min_size = labels.size();
  for (const auto& m : cl.members) {
    st.min_size = std::min(st.min_size, m.size());
    st.max_size = std::max(st.max_size, m.size());
  }
  st.mean_size = static_cast<double>(labels.size()) / static_cast<double>(cl.count());
  return st;
}

MetricsReport evaluate(const DatasetManifest& manifest, const std::vector<MoleculeRecord>& records,
                       const ClusterAssignment& assignment, const Matrix& feature_points,
                       FeatureSpace space) {
  check_sizes(records.size(), assignment.labels.size(), "evaluate");
  check_sizes(static_cast<std::size_t>(feature_points.rows()), records.size(), "evaluate");
  if (records.empty()) throw std::invalid_argument("evaluate: empty shard");
  const std::span<const int> labels(assignment.labels);
  MetricsReport r;
  r.feature_space = space;
  r.silhouette_euclidean = silhouette(euclidean_distances(feature_points), labels);
  r.davies_bouldin = davies_bouldin(feature_points, labels);
  r.calinski_harabasz = calinski_harabasz(feature_points, labels);
  r.silhouette_tanimoto = silhouette(tanimoto_distances(records), labels);
  r.sf_icf = sf_icf(records, labels);
  std::vector<std::string> groups;
  if (!manifest.group_index("scaffold")) groups.push_back("scaffold");
  for (const auto& g : manifest.feature_groups) groups.push_back(g.name);
  for (const auto& g : groups) r.per_feature_group_ficf.emplace_back(g, x_f_icf(manifest, records, labels, g));
  r.cluster_stats = cluster_statistics(labels);
  return r;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"silhouette_euclidean", "davies_bouldin",
                                              "calinski_harabasz", "silhouette_tanimoto", "sf_icf"};
  return names;
}

MetricValue metric_value(const MetricsReport& report, const std::string& name) {
  if (name == "silhouette_euclidean") return report.silhouette_euclidean;
  if (name == "davies_bouldin") return report.davies_bouldin;
  if (name == "calinski_harabasz") return report.calinski_harabasz;
  if (name == "silhouette_tanimoto") return report.silhouette_tanimoto;
  if (name == "sf_icf") return report.sf_icf;
  if (name == "n_clusters") return static_cast<double>(report.cluster_stats.n_clusters);
  if (name == "mean_cluster_size") return report.cluster_stats.mean_size;
  if (name.starts_with("ficf:")) {
    const auto group = name.substr(5);
    for (const auto& [g, v] : report.per_feature_group_ficf)
      if (g == group) return v;
    return std::nullopt;
  }
  throw std::invalid_argument("unknown metric '" + name + "'");
}

MetricValue mean_metric(std::span<const MetricsReport> reports, const std::string& name) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : reports) {
    const auto v = metric_value(r, name);
    if (!v) continue;
    sum += *v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace fedmol
