#include "fedmol/pca.hpp"

#include <lapacke.h>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedmol {

CovarianceAccumulator::CovarianceAccumulator(Eigen::Index dim)
    : sum_x(Vector::Zero(dim)), sum_outer(Eigen::MatrixXd::Zero(dim, dim)) {}

void CovarianceAccumulator::add(const Fingerprint& fp) {
  if (static_cast<Eigen::Index>(fp.size()) != dim())
    throw std::invalid_argument("CovarianceAccumulator: fingerprint length mismatch");
  const auto on = fp.on_bits();
  for (auto a : on) {
    const auto i = static_cast<Eigen::Index>(a);
    sum_x(i) += 1.0;
    for (auto b : on) sum_outer(i, static_cast<Eigen::Index>(b)) += 1.0;
  }
  ++count;
}

CovarianceAccumulator& CovarianceAccumulator::operator+=(const CovarianceAccumulator& other) {
  if (other.dim() != dim()) throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
  sum_x += other.sum_x;
  sum_outer += other.sum_outer;
  count += other.count;
  return *this;
}

CovarianceAccumulator local_covariance_partials(const std::vector<MoleculeRecord>& records) {
  if (records.empty()) throw std::invalid_argument("local_covariance_partials: empty shard");
  CovarianceAccumulator acc(static_cast<Eigen::Index>(records.front().fingerprint.size()));
  for (const auto& r : records) acc.add(r.fingerprint);
  return acc;
}

CovarianceAccumulator local_covariance_partials(const Matrix& points) {
  if (points.rows() == 0) throw std::invalid_argument("local_covariance_partials: empty shard");
  CovarianceAccumulator acc(points.cols());
  acc.sum_x = points.colwise().sum().transpose();
  acc.sum_outer.noalias() = points.transpose() * points;
  acc.count = static_cast<std::size_t>(points.rows());
  return acc;
}

namespace {

CovarianceAccumulator merge(std::span<const CovarianceAccumulator> partials) {
  if (partials.empty()) throw std::invalid_argument("assemble_covariance: no partials");
  CovarianceAccumulator total(partials.front().dim());
  for (const auto& p : partials) total += p;
  return total;
}

}  // namespace

Eigen::MatrixXd assemble_covariance(std::span<const CovarianceAccumulator> partials) {
  const CovarianceAccumulator total = merge(partials);
  if (total.count < 2)
    throw std::invalid_argument("assemble_covariance: need at least 2 points, got " +
                                std::to_string(total.count));
  const auto d = total.dim();
  const long double m = static_cast<long double>(total.count);
  Eigen::MatrixXd c(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      const long double v = static_cast<long double>(total.sum_outer(i, j)) -
                            static_cast<long double>(total.sum_x(i)) *
                                static_cast<long double>(total.sum_x(j)) / m;
      c(i, j) = static_cast<double>(v);
    }
  return 0.5 * (c + c.transpose());
}

Vector pooled_mean(std::span<const CovarianceAccumulator> partials) {
  const CovarianceAccumulator total = merge(partials);
  if (total.count == 0) throw std::invalid_argument("pooled_mean: no points");
  return total.sum_x / static_cast<double>(total.count);
}

std::optional<double> ProjectionMatrix::eigengap() const {
  if (!next_eigenvalue || eigenvalues.size() == 0) return std::nullopt;
  return eigenvalues(eigenvalues.size() - 1) - *next_eigenvalue;
}

ProjectionMatrix pca_from_covariance(const Eigen::MatrixXd& covariance, const Vector& mean, int p) {
  const auto n = covariance.rows();
  if (covariance.cols() != n) throw std::invalid_argument("pca: covariance must be square");
  if (mean.size() != n) throw std::invalid_argument("pca: mean dimension mismatch");
  if (p < 1 || p > n)
    throw std::invalid_argument("pca: p must be in [1, " + std::to_string(n) + "], got " +
                                std::to_string(p));

  const auto q = static_cast<lapack_int>(std::min<Eigen::Index>(p + 1, n));
  const auto ln = static_cast<lapack_int>(n);
  Eigen::MatrixXd a = covariance;  // overwritten by LAPACK
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, q);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(q));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', ln, a.data(), ln, 0.0, 0.0,
                                         ln - q + 1, ln, LAPACKE_dlamch('S'), &found, w.data(),
                                         z.data(), ln, support.data());
  if (info != 0 || found != q)
    throw std::runtime_error("pca: eigensolver failed (info=" + std::to_string(info) + ")");

  ProjectionMatrix out;
  out.mean = mean;
  out.components.resize(p, n);
  out.eigenvalues.resize(p);
  // dsyevr returns ascending order; the largest is the last column.
  for (int r = 0; r < p; ++r) {
    const auto col = q - 1 - r;
    Vector v = z.col(col);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0) v = -v;
    out.components.row(r) = v.transpose();
    out.eigenvalues(r) = std::max(0.0, w(col));
  }
  if (q > p) out.next_eigenvalue = std::max(0.0, w(0));
  return out;
}

Matrix project(const Matrix& points, const ProjectionMatrix& proj) {
  if (points.cols() != proj.mean.size())
    throw std::invalid_argument("project: dimension mismatch (" + std::to_string(points.cols()) +
                                " vs " + std::to_string(proj.mean.size()) + ")");
  return (points.rowwise() - proj.mean.transpose()) * proj.components.transpose();
}

Matrix project(const std::vector<MoleculeRecord>& records, const ProjectionMatrix& proj) {
  const Eigen::RowVectorXd offset = (proj.components * proj.mean).transpose();
  Matrix out(static_cast<Eigen::Index>(records.size()), proj.p());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& fp = records[i].fingerprint;
    if (static_cast<Eigen::Index>(fp.size()) != proj.mean.size())
      throw std::invalid_argument("project: fingerprint length mismatch");
    Eigen::RowVectorXd y = -offset;
    for (auto b : fp.on_bits()) y += proj.components.col(static_cast<Eigen::Index>(b)).transpose();
    out.row(static_cast<Eigen::Index>(i)) = y;
  }
  return out;
}

namespace {

template <class Data>
FedPcaResult run_fed_pca(std::span<const Data> shards, int p) {
  if (shards.empty()) throw std::invalid_argument("fed_pca: no shards");
  PcaProtocol<Data> protocol{p};
  FederationConfig cfg{static_cast<int>(shards.size()), 1, 0, false};
  auto run = run_federation(shards, protocol, cfg);
  return FedPcaResult{std::move(*run.server_state), std::move(run.local_outputs), std::move(run.log)};
}

}  // namespace

FedPcaResult fed_pca(std::span<const Matrix> shards, int p) { return run_fed_pca(shards, p); }

FedPcaResult fed_pca(std::span<const ClientShard> shards, int p) { return run_fed_pca(shards, p); }

ProjectionMatrix centralized_pca(const Matrix& points, int p) {
  if (points.rows() < 2) throw std::invalid_argument("centralized_pca: need at least 2 points");
  const Vector mean = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - mean.transpose();
  Eigen::MatrixXd c = centered.transpose() * centered;
  c = 0.5 * (c + c.transpose());
  return pca_from_covariance(c, mean, p);
}

ProjectionMatrix centralized_pca(const std::vector<MoleculeRecord>& records, int p) {
  return centralized_pca(to_points(records), p);
}

namespace {

FedPcaKMeansResult kmeans_on_projection(FedPcaResult pca, const KMeansConfig& cfg) {
  FedPcaKMeansResult out;
  out.kmeans = fed_kmeans(std::span<const Matrix>(pca.projected), cfg);
  for (auto& a : out.kmeans.assignments) a.method = Method::fed_pca_kmeans;
  out.projection = std::move(pca.projection);
  out.projected = std::move(pca.projected);
  return out;
}

}  // namespace

FedPcaKMeansResult fed_pca_kmeans(std::span<const ClientShard> shards, int p, const KMeansConfig& cfg) {
  return kmeans_on_projection(fed_pca(shards, p), cfg);
}

FedPcaKMeansResult fed_pca_kmeans(std::span<const Matrix> shards, int p, const KMeansConfig& cfg) {
  return kmeans_on_projection(fed_pca(shards, p), cfg);
}

}  // namespace fedmol
