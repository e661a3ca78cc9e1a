#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedmol/clustering.hpp"
#include "fedmol/metrics.hpp"
#include "fedmol/partitioner.hpp"

namespace fedmol {

/// Hyperparameter grids the benchmark sweeps.
namespace grid {
inline const std::vector<int> kClients{5, 10};
inline const std::vector<int> kK{5, 10, 20, 50, 100, 200, 500};
inline const std::vector<int> kRounds{3, 5, 10};
inline const std::vector<int> kP{5, 10, 20, 50};
inline const std::vector<std::size_t> kNhe{4, 8, 16, 32};
}  // namespace grid

/// Metrics that enter rank aggregation by default (the Tanimoto silhouette
/// is reported but not ranked).
const std::vector<std::string>& default_ranking_metrics();

/// Whether larger values of the metric are better.
bool higher_is_better(const std::string& metric);

struct ExperimentConfig {
  std::string dataset = "dataset";
  std::filesystem::path input;       // pooled dataset, partitioned on the fly
  std::filesystem::path shards_dir;  // or pre-partitioned <dataset>.client<k>.tsv files
  int n_clients = 5;
  Method method = Method::fed_kmeans;
  int k = 5;
  int rounds = 3;
  int p = 5;
  std::size_t n_he = 32;
  std::vector<std::string> metrics = default_ranking_metrics();
  std::uint64_t seed = 0;
  double primary_fraction = 0.9;
  double dirichlet_alpha = 50.0;
  bool unsafe_grid = false;

  /// Known per-method defaults: k=5,r=3 for 5 clients; k=500,r=10 for 10
  /// clients (Fed-kMeans); p=5,k=5 with r=3 / r=5 (Fed-PCA+Fed-kMeans);
  /// n_he=32 (Fed-LSH).
  static ExperimentConfig defaults_for(Method method, int n_clients);
};

/// Throws std::invalid_argument on an invalid configuration.
void validate(const ExperimentConfig& cfg);

/// Canonical "key=value" lines of the hyperparameters that matter for the
/// method (no paths, no dataset name).
std::string canonical_settings(const ExperimentConfig& cfg);

/// 16 hex digits identifying the hyperparameter setting.
std::string config_id(const ExperimentConfig& cfg);

/// Parses a flat key=value config file. Lists (comma-separated) are allowed
/// for clients, method, k, rounds, p, n_he and seed; the cartesian product
/// over the axes relevant to each method is returned, de-duplicated.
std::vector<ExperimentConfig> parse_config_text(const std::string& text);
std::vector<ExperimentConfig> load_config_file(const std::filesystem::path& path);

struct FederatedData {
  DatasetManifest manifest;
  std::vector<ClientShard> shards;
};

/// Loads pre-partitioned shards or partitions `input` with the config's
/// partition parameters.
FederatedData load_data(const ExperimentConfig& cfg);

struct SettingResult {
  std::string setting;  // federated | centralized | random
  std::vector<ClusterAssignment> assignments;
  std::vector<MetricsReport> reports;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  std::string id;
  DatasetManifest manifest;
  SettingResult federated;
  SettingResult centralized;
  SettingResult random;
  std::vector<std::vector<std::string>> client_scaffolds;  // on-client, for per-cluster rows

  const SettingResult& setting(const std::string& name) const;
};

/// Runs the method, its centralized counterpart and the random baseline,
/// then evaluates every client. Centralized labels are computed on pooled
/// data and scored per client; the random baseline matches the federated
/// cluster count per client and is scored in the same feature space.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const FederatedData& data);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Results directory: <root>/<dataset>/<method>/<config-id>.
std::filesystem::path result_dir(const std::filesystem::path& root, const ExperimentResult& result);

/// Writes client<k>.csv, aggregate.csv, clusters.csv and config.txt.
/// Output is staged and moved into place, so a failure leaves no partial directory.
std::filesystem::path persist(const ExperimentResult& result, const std::filesystem::path& root);

// Rank aggregation.

struct ScoredConfig {
  ExperimentConfig cfg;
  std::string dataset;
  std::vector<MetricsReport> reports;  // federated, per client
};

struct RankEntry {
  std::string config_id;
  std::string dataset;
  std::string metric;
  int client = 0;
  MetricValue value;
  double rank = 0.0;
};

struct RankTable {
  std::vector<RankEntry> entries;
  std::map<std::string, double> mean_rank;     // by config id
  std::map<std::string, double> mean_clusters;  // by config id
  std::map<std::string, std::string> best;     // method name -> config id
  std::map<std::string, ExperimentConfig> configs;
};

/// Ranks configurations of the same method per (dataset, metric, client)
/// slice (1 = best, ties share the mean rank, missing values rank last),
/// averages over metrics, then clients, then datasets, and picks the lowest
/// mean rank per method. Ties: fewer clusters, then smaller k/p/n_he, then
/// config id.
RankTable rank_configs(std::span<const ScoredConfig> scored, const std::vector<std::string>& metrics);

struct GridResult {
  RankTable table;
  std::vector<ExperimentResult> runs;
};

GridResult grid_search(const std::vector<ExperimentConfig>& grid);

}  // namespace fedmol
