#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fedmol/experiments.hpp"
#include "fedmol/report.hpp"
#include "fedmol/synthetic.hpp"
#include "support.hpp"

using namespace fedmol;
namespace fs = std::filesystem;

namespace {

FederatedData small_data(int n_clients, std::uint64_t seed = 1, std::size_t scaffolds = 10) {
  SyntheticSpec spec{scaffolds, 10, 8, 4, 256, seed};
  auto ds = generate_synthetic(spec);
  FederatedData d;
  d.manifest = ds.manifest;
  d.manifest.name = "toy";
  if (n_clients == 1)
    d.shards.push_back({0, ds.records});
  else
    d.shards = soft_split(ds.records, PartitionConfig{n_clients, 0.9, 50.0, seed});
  return d;
}

ExperimentConfig config(Method m, int clients, int k = 5) {
  auto cfg = ExperimentConfig::defaults_for(m, clients);
  cfg.dataset = "toy";
  cfg.k = k;
  cfg.unsafe_grid = true;
  return cfg;
}

void check_same_reports(const std::vector<MetricsReport>& a, const std::vector<MetricsReport>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c)
    for (const auto& name : metric_names()) CHECK(metric_value(a[c], name) == metric_value(b[c], name));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MetricsReport report(MetricValue sil, MetricValue db, int clusters = 5) {
  MetricsReport r;
  r.silhouette_euclidean = sil;
  r.davies_bouldin = db;
  r.cluster_stats.n_clusters = clusters;
  return r;
}

ScoredConfig scored(int k, std::vector<MetricsReport> reps, const std::string& dataset = "d") {
  ScoredConfig s;
  s.cfg = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
  s.cfg.k = k;
  s.dataset = dataset;
  s.reports = std::move(reps);
  return s;
}

}  // namespace

TEST_CASE("defaults follow the known optima") {
  auto a = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
  CHECK(a.k == 5);
  CHECK(a.rounds == 3);
  auto b = ExperimentConfig::defaults_for(Method::fed_kmeans, 10);
  CHECK(b.k == 500);
  CHECK(b.rounds == 10);
  auto c = ExperimentConfig::defaults_for(Method::fed_pca_kmeans, 5);
  CHECK(c.p == 5);
  CHECK(c.k == 5);
  CHECK(c.rounds == 3);
  CHECK(ExperimentConfig::defaults_for(Method::fed_pca_kmeans, 10).rounds == 5);
  CHECK(ExperimentConfig::defaults_for(Method::fed_lsh, 5).n_he == 32);
}

TEST_CASE("validation") {
  auto cfg = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
  CHECK_NOTHROW(validate(cfg));
  cfg.k = 7;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.unsafe_grid = true;
  CHECK_NOTHROW(validate(cfg));
  cfg.k = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  auto d = ExperimentConfig::defaults_for(Method::fed_lsh, 5);
  d.k = 7;  // irrelevant to LSH
  CHECK_NOTHROW(validate(d));
  d.n_clients = 3;
  CHECK_THROWS_AS(validate(d), std::invalid_argument);
  auto e = ExperimentConfig::defaults_for(Method::centralized_kmeans, 5);
  CHECK_THROWS_AS(validate(e), std::invalid_argument);
  auto f = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
  f.metrics = {"accuracy"};
  CHECK_THROWS_AS(validate(f), std::invalid_argument);
}

TEST_CASE("config ids depend only on the relevant hyperparameters") {
  auto a = ExperimentConfig::defaults_for(Method::fed_lsh, 5);
  auto b = a;
  b.k = 200;
  b.dataset = "other";
  b.input = "/x/y.tsv";
  CHECK(config_id(a) == config_id(b));
  CHECK(config_id(a).size() == 16);
  b.n_he = 8;
  CHECK(config_id(a) != config_id(b));
  auto k5 = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
  auto k10 = k5;
  k10.k = 10;
  CHECK(config_id(k5) != config_id(k10));
}

TEST_CASE("config text expands list axes per method") {
  const auto cfgs = parse_config_text(
      "# grid\n"
      "dataset = toy\n"
      "input = data.tsv\n"
      "method = fed-kmeans, fed-lsh\n"
      "k = 5,10\n"
      "rounds = 3\n"
      "n_he = 8, 16, 32\n"
      "seed = 4\n");
  CHECK(cfgs.size() == 5);
  int km = 0, lsh = 0;
  for (const auto& c : cfgs) {
    CHECK(c.dataset == "toy");
    CHECK(c.seed == 4);
    if (c.method == Method::fed_kmeans) ++km;
    if (c.method == Method::fed_lsh) ++lsh;
  }
  CHECK(km == 2);
  CHECK(lsh == 3);
  CHECK_THROWS_AS(parse_config_text("colour = red\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("k = five\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("k = 7\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("k = 5\nk = 10\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("method = magic\n"), std::invalid_argument);
  CHECK(parse_config_text("k = 7\nunsafe_grid = true\n").front().k == 7);
}

TEST_CASE("rank aggregation: one config, dominance and a hand-computed fixture") {
  const std::vector<std::string> metrics{"silhouette_euclidean", "davies_bouldin"};
  {
    std::vector<ScoredConfig> one{scored(5, {report(0.1, 1.0)})};
    const auto t = rank_configs(one, metrics);
    CHECK(t.best.at("fed-kmeans") == config_id(one[0].cfg));
  }
  {
    std::vector<ScoredConfig> two{scored(5, {report(0.1, 2.0), report(0.0, 3.0)}),
                                  scored(10, {report(0.5, 1.0), report(0.4, 0.5)})};
    CHECK(rank_configs(two, metrics).best.at("fed-kmeans") == config_id(two[1].cfg));
  }
  std::vector<ScoredConfig> three{scored(5, {report(0.5, 1.0), report(0.2, 2.0)}),
                                  scored(10, {report(0.4, 0.5), report(0.3, 2.0)}),
                                  scored(20, {report(0.1, 3.0), report(std::nullopt, 1.0)})};
  const auto t = rank_configs(three, metrics);
  CHECK(t.mean_rank.at(config_id(three[0].cfg)) == 1.875);
  CHECK(t.mean_rank.at(config_id(three[1].cfg)) == 1.625);
  CHECK(t.mean_rank.at(config_id(three[2].cfg)) == 2.5);
  CHECK(t.best.at("fed-kmeans") == config_id(three[1].cfg));
  CHECK(t.entries.size() == 12);

  // order of the input does not matter
  std::vector<ScoredConfig> shuffled{three[2], three[0], three[1]};
  const auto u = rank_configs(shuffled, metrics);
  CHECK(u.mean_rank == t.mean_rank);
  CHECK(u.best == t.best);
}

TEST_CASE("rank aggregation averages clients then datasets and breaks ties by cluster count") {
  const std::vector<std::string> metrics{"silhouette_euclidean"};
  std::vector<ScoredConfig> s{scored(5, {report(0.9, 0, 5)}, "a"), scored(10, {report(0.1, 0, 10)}, "a"),
                              scored(5, {report(0.1, 0, 5)}, "b"), scored(10, {report(0.9, 0, 10)}, "b")};
  const auto t = rank_configs(s, metrics);
  CHECK(t.mean_rank.at(config_id(s[0].cfg)) == 1.5);
  CHECK(t.mean_rank.at(config_id(s[1].cfg)) == 1.5);
  CHECK(t.best.at("fed-kmeans") == config_id(s[0].cfg));
}

TEST_CASE("explicit lower-is-better equals ranking the negated metric") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<ScoredConfig> direct, negated;
    for (int k : {5, 10, 20, 50}) {
      std::vector<MetricsReport> a, b;
      for (int c = 0; c < 3; ++c) {
        const double db = u(rng);
        a.push_back(report(std::nullopt, db));
        b.push_back(report(-db, std::nullopt));
      }
      direct.push_back(scored(k, a));
      negated.push_back(scored(k, b));
    }
    CHECK(rank_configs(direct, {"davies_bouldin"}).best == rank_configs(negated, {"silhouette_euclidean"}).best);
  }
}

TEST_CASE("method random makes all three settings coincide") {
  const auto data = small_data(5);
  const auto res = run_experiment(config(Method::random, 5), data);
  CHECK(res.federated.assignments == res.centralized.assignments);
  CHECK(res.federated.assignments == res.random.assignments);
  check_same_reports(res.federated.reports, res.random.reports);
  check_same_reports(res.federated.reports, res.centralized.reports);
}

TEST_CASE("single-client federation equals the centralized setting") {
  const auto data = small_data(1);
  for (Method m : {Method::fed_kmeans, Method::fed_lsh}) {
    auto cfg = config(m, 1);
    cfg.n_he = 8;
    const auto res = run_experiment(cfg, data);
    CHECK(res.federated.assignments[0].labels == res.centralized.assignments[0].labels);
    check_same_reports(res.federated.reports, res.centralized.reports);
  }
  const auto pca = run_experiment(config(Method::fed_pca_kmeans, 1), data);
  for (const auto& name : {"sf_icf", "silhouette_tanimoto"})
    CHECK(*metric_value(pca.federated.reports[0], name) ==
          doctest::Approx(*metric_value(pca.centralized.reports[0], name)).epsilon(1e-10));
}

TEST_CASE("random baseline matches the federated cluster count") {
  const auto data = small_data(5);
  auto cfg = config(Method::fed_lsh, 5);
  cfg.n_he = 8;
  const auto res = run_experiment(cfg, data);
  for (std::size_t c = 0; c < 5; ++c) {
    CHECK(res.random.assignments[c].n_clusters() <= res.federated.assignments[c].n_clusters());
    CHECK(res.random.reports[c].feature_space == res.federated.reports[c].feature_space);
  }
  CHECK(res.federated.reports[0].feature_space == FeatureSpace::raw);
  const auto pca = run_experiment(config(Method::fed_pca_kmeans, 5), data);
  CHECK(pca.random.reports[0].feature_space == FeatureSpace::pca_projected);
}

TEST_CASE("persisted results are deterministic and complete") {
  const auto data = small_data(5);
  const auto root_a = fs::temp_directory_path() / "fedmol_test_exp_a";
  const auto root_b = fs::temp_directory_path() / "fedmol_test_exp_b";
  fs::remove_all(root_a);
  fs::remove_all(root_b);
  const auto cfg = config(Method::fed_kmeans, 5);
  const auto dir_a = persist(run_experiment(cfg, data), root_a);
  const auto dir_b = persist(run_experiment(cfg, data), root_b);
  CHECK(dir_a.lexically_relative(root_a) == fs::path("toy") / "fed-kmeans" / config_id(cfg));
  for (const auto& f : {"client0.csv", "client4.csv", "aggregate.csv", "clusters.csv", "config.txt"}) {
    REQUIRE(fs::exists(dir_a / f));
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));
  }
  CHECK(!fs::exists(dir_a / "client5.csv"));
  const auto agg = slurp(dir_a / "aggregate.csv");
  CHECK(agg.starts_with(kReportHeader));
  CHECK(agg.find("toy,fed-kmeans,federated,mean,sf_icf,") != std::string::npos);
  CHECK(agg.find("toy,fed-kmeans,random,mean,silhouette_euclidean,") != std::string::npos);
}

TEST_CASE("grid search ranks every configuration") {
  const auto dir = fs::temp_directory_path() / "fedmol_test_grid";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SyntheticSpec spec{10, 10, 8, 4, 128, 3};
  const auto ds = generate_synthetic(spec);
  write_dataset(ds.manifest, ds.records, dir / "toy.tsv");
  std::vector<ExperimentConfig> grid;
  for (int k : {5, 10}) {
    auto c = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
    c.dataset = "toy";
    c.input = dir / "toy.tsv";
    c.k = k;
    grid.push_back(c);
  }
  const auto res = grid_search(grid);
  CHECK(res.runs.size() == 2);
  CHECK(res.table.mean_rank.size() == 2);
  CHECK(res.table.best.count("fed-kmeans") == 1);
}

TEST_CASE("end-to-end on a 500-record synthetic dataset stays within budget") {
  const auto start = std::chrono::steady_clock::now();
  SyntheticSpec spec;  // 20 x 25, F = 2048
  const auto ds = generate_synthetic(spec);
  FederatedData data{ds.manifest, soft_split(ds.records, PartitionConfig{})};
  data.manifest.name = "blobs";
  for (Method m : {Method::fed_kmeans, Method::fed_lsh}) {
    auto cfg = ExperimentConfig::defaults_for(m, 5);
    cfg.dataset = "blobs";
    run_experiment(cfg, data);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 60.0);
}
