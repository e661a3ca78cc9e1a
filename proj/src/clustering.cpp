#include "fedmol/clustering.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace fedmol {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::fed_kmeans: return "fed-kmeans";
    case Method::fed_pca_kmeans: return "fed-pca-kmeans";
    case Method::fed_lsh: return "fed-lsh";
    case Method::centralized_kmeans: return "kmeans";
    case Method::centralized_pca_kmeans: return "pca-kmeans";
    case Method::centralized_lsh: return "lsh";
    case Method::random: return "random";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::fed_kmeans, Method::fed_pca_kmeans, Method::fed_lsh,
                 Method::centralized_kmeans, Method::centralized_pca_kmeans,
                 Method::centralized_lsh, Method::random})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

int ClusterAssignment::n_clusters() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

ClusterAssignment assignment_from_ids(const std::vector<int>& ids, Method method,
                                      std::string provenance) {
  const std::set<int> distinct(ids.begin(), ids.end());
  std::map<int, int> dense;
  ClusterAssignment out;
  out.method = method;
  out.provenance = std::move(provenance);
  for (int id : distinct) {
    dense.emplace(id, static_cast<int>(dense.size()));
    out.cluster_keys.push_back(std::to_string(id));
  }
  out.labels.reserve(ids.size());
  for (int id : ids) out.labels.push_back(dense.at(id));
  return out;
}

Matrix to_points(const std::vector<MoleculeRecord>& records) {
  if (records.empty()) return Matrix(0, 0);
  const auto F = static_cast<Eigen::Index>(records.front().fingerprint.size());
  Matrix X = Matrix::Zero(static_cast<Eigen::Index>(records.size()), F);
  for (std::size_t i = 0; i < records.size(); ++i)
    for (auto b : records[i].fingerprint.on_bits())
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = 1.0;
  return X;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, back;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [f, fnew] = fwd.emplace(a[i], b[i]);
    auto [r, rnew] = back.emplace(b[i], a[i]);
    if (f->second != b[i] || r->second != a[i]) return false;
  }
  return true;
}

}  // namespace fedmol
