#include "fedmol/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "fedmol/rng.hpp"

namespace fedmol {

namespace {

std::string provenance(const KMeansConfig& cfg) {
  return "k=" + std::to_string(cfg.k) + ";rounds=" + std::to_string(cfg.rounds) +
         ";seed=" + std::to_string(cfg.seed);
}

}  // namespace

CentroidModel kmeanspp_init(const Matrix& points, int k, std::uint64_t seed) {
  const auto n = points.rows();
  if (k < 1) throw std::invalid_argument("kmeanspp_init: k must be >= 1");
  if (k > n)
    throw std::invalid_argument("kmeanspp_init: k (" + std::to_string(k) + ") exceeds point count (" +
                                std::to_string(n) + ")");

  Rng rng(seed);
  std::vector<Eigen::Index> chosen;
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

  auto take = [&](Eigen::Index i) {
    chosen.push_back(i);
    taken[static_cast<std::size_t>(i)] = 1;
    for (Eigen::Index j = 0; j < n; ++j)
      d2[static_cast<std::size_t>(j)] =
          std::min(d2[static_cast<std::size_t>(j)], (points.row(j) - points.row(i)).squaredNorm());
  };

  take(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  while (static_cast<int>(chosen.size()) < k) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!taken[static_cast<std::size_t>(j)]) total += d2[static_cast<std::size_t>(j)];
    if (total > 0.0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      Eigen::Index pick = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double w = taken[static_cast<std::size_t>(j)] ? 0.0 : d2[static_cast<std::size_t>(j)];
        if (w <= 0.0) continue;
        pick = j;
        acc += w;
        if (acc > u) break;
      }
      take(pick);
    } else {
      std::vector<Eigen::Index> free;
      for (Eigen::Index j = 0; j < n; ++j)
        if (!taken[static_cast<std::size_t>(j)]) free.push_back(j);
      take(free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)]);
    }
  }

  CentroidModel model;
  model.centroids.resize(k, points.cols());
  for (int c = 0; c < k; ++c) model.centroids.row(c) = points.row(chosen[static_cast<std::size_t>(c)]);
  model.counts.assign(static_cast<std::size_t>(k), 0);
  return model;
}

std::vector<int> nearest_centroids(const Matrix& points, const Matrix& centroids) {
  if (points.cols() != centroids.cols())
    throw std::invalid_argument("nearest_centroids: dimension mismatch");
  std::vector<int> out(static_cast<std::size_t>(points.rows()), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = (points.row(i) - centroids.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        out[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
    }
  }
  return out;
}

double inertia(const Matrix& points, const Matrix& centroids) {
  const auto labels = nearest_centroids(points, centroids);
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

KMeansUpdate local_kmeans_step(const Matrix& points, const CentroidModel& global, int client_id,
                               int local_iterations) {
  if (points.cols() != global.dim())
    throw std::invalid_argument("local_kmeans_step: dimension mismatch (" +
                                std::to_string(points.cols()) + " vs " +
                                std::to_string(global.dim()) + ")");
  if (local_iterations < 1) throw std::invalid_argument("local_kmeans_step: local_iterations < 1");

  const int k = global.k();
  KMeansUpdate msg{client_id, global};
  for (int it = 0; it < local_iterations; ++it) {
    const auto labels = nearest_centroids(points, msg.local.centroids);
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const int j = labels[static_cast<std::size_t>(i)];
      sums.row(j) += points.row(i);
      ++counts[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < k; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0)
        msg.local.centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
    msg.local.counts = std::move(counts);
  }
  return msg;
}

CentroidModel aggregate_centroids(std::span<const KMeansUpdate> messages,
                                  const CentroidModel& previous) {
  if (messages.empty()) throw ProtocolError("aggregate_centroids: no messages");
  std::vector<const KMeansUpdate*> ordered;
  for (const auto& m : messages) {
    if (m.local.k() != previous.k() || m.local.dim() != previous.dim() ||
        m.local.counts.size() != static_cast<std::size_t>(previous.k()))
      throw ProtocolError("aggregate_centroids: client " + std::to_string(m.client_id) +
                          " sent an inconsistent model");
    ordered.push_back(&m);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  const int k = previous.k();
  CentroidModel out;
  out.centroids = previous.centroids;
  out.counts.assign(static_cast<std::size_t>(k), 0);
  for (int j = 0; j < k; ++j) {
    std::size_t total = 0;
    for (const auto* m : ordered) total += m->local.counts[static_cast<std::size_t>(j)];
    out.counts[static_cast<std::size_t>(j)] = total;
    if (total == 0) continue;
    // Normalised weights keep a single contributor's centroid bit-exact.
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(previous.dim());
    for (const auto* m : ordered) {
      const auto c = m->local.counts[static_cast<std::size_t>(j)];
      if (c == 0) continue;
      acc += (static_cast<double>(c) / static_cast<double>(total)) * m->local.centroids.row(j);
    }
    out.centroids.row(j) = acc;
  }
  return out;
}

KMeansProtocol::SetupMessage KMeansProtocol::client_setup(const Matrix& points,
                                                          const ClientContext& ctx) const {
  if (ctx.client_id != 0) return std::nullopt;
  return kmeanspp_init(points, k, init_seed);
}

KMeansProtocol::State KMeansProtocol::init_server(std::span<const SetupMessage> setup) const {
  if (setup.empty() || !setup.front()) throw ProtocolError("fed_kmeans: client 0 sent no seeding");
  return State{*setup.front(), {}};
}

KMeansProtocol::Message KMeansProtocol::client_round(const Matrix& points, const State& state,
                                                     const ClientContext& ctx) const {
  return local_kmeans_step(points, state.model, ctx.client_id, local_iterations);
}

KMeansProtocol::State KMeansProtocol::aggregate(const State& state, std::span<const Message> messages,
                                                int /*round*/) const {
  State next{aggregate_centroids(messages, state.model), state.history};
  next.history.push_back(next.model);
  return next;
}

KMeansProtocol::Output KMeansProtocol::client_finalize(const Matrix& points, const State& state,
                                                       const ClientContext&) const {
  return nearest_centroids(points, state.model.centroids);
}

std::size_t KMeansProtocol::payload_size(const Message& m) const {
  return static_cast<std::size_t>(m.local.centroids.size()) + m.local.counts.size();
}

FedKMeansResult fed_kmeans(std::span<const Matrix> shards, const KMeansConfig& cfg) {
  if (shards.empty()) throw std::invalid_argument("fed_kmeans: no shards");
  Eigen::Index total = 0;
  for (const auto& s : shards) total += s.rows();
  if (total < cfg.k) throw std::invalid_argument("fed_kmeans: fewer points than k");

  KMeansProtocol protocol{cfg.k, cfg.seed, cfg.local_iterations};
  FederationConfig fcfg{static_cast<int>(shards.size()), cfg.rounds, cfg.seed, cfg.parallel};
  auto run = run_federation(shards, protocol, fcfg);

  FedKMeansResult out;
  out.model = run.server_state.model;
  out.round_models = std::move(run.server_state.history);
  out.log = std::move(run.log);
  for (const auto& labels : run.local_outputs)
    out.assignments.push_back(assignment_from_ids(labels, Method::fed_kmeans, provenance(cfg)));
  return out;
}

KMeansResult centralized_kmeans(const Matrix& points, int k, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw std::invalid_argument("centralized_kmeans: iterations must be >= 1");
  CentroidModel model = kmeanspp_init(points, k, seed);
  for (int it = 0; it < iterations; ++it) model = local_kmeans_step(points, model).local;
  KMeansResult out;
  out.assignment = assignment_from_ids(nearest_centroids(points, model.centroids),
                                       Method::centralized_kmeans,
                                       provenance(KMeansConfig{k, iterations, seed, 1, false}));
  out.model = std::move(model);
  return out;
}

}  // namespace fedmol
